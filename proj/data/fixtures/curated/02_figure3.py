v0 = 407
if v0 % 10 < 3:
  v0 += 4
else:
  v0 -= 2
