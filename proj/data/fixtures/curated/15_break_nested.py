v0 = 5
v4 = 9
while v4 > 0:
  v4 -= 1
  v0 *= 7
  if v0 % 10 >= 9:
    break
v0 += 1
