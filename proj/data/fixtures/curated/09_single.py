v0 = 0
