# Flow table and IP-to-domain mapping
