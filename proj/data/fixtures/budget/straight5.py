v0 = 5
v0 += 3
v0 *= 2
v0 -= 1
v0 += 7
