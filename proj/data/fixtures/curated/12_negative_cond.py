v0 = 2
v0 -= 9
if v0 % 10 >= 3:
  v0 += 100
v0 *= 3
