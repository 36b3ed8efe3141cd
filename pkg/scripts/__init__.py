# Console scripts for xorlab
