# Capture ingest: pcap decoding, DNS and TLS observation extraction
