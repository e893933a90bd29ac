namespace gerbex {}
