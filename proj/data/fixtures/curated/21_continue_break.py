v0 = 0
v9 = 8
while v9 > 0:
  v9 -= 1
  v0 += 3
  if v0 % 10 < 4:
    continue
  if v0 % 10 > 7:
    break
  v0 += 1
