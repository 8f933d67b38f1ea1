# Feature extraction for the four schemas
