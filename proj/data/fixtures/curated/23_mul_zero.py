v0 = 731
v0 *= 0
v0 += 8
if v0 % 10 >= 8:
  v0 -= 9
