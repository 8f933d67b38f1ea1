# One module per command; each stage reads and writes the flat-file stores.
