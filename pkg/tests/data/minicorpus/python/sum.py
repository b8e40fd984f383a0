def total(items):
    acc = 0
    for item in items:
        acc += item
    return acc


numbers = [1, 2, 3]
print(total(numbers))
