v0 = 999
v0 += 1
