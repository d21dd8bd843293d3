v0 = 7
pass
if v0 % 10 > 6:
  pass
else:
  v0 += 1
v0 -= 2
