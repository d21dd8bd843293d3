v0 = 3
v0 -= 9
v0 -= 1
