from lib.math_utils import add


def main():
    total = add(1, 2)
    return total
