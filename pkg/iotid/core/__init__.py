# Core types and errors
