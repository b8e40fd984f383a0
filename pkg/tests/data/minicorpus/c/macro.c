#define SWAP(a, b) \
    do { int tmp = a; a = b; b = tmp; } while (0)

void sort2(int *lo, int *hi) {
    if (*lo > *hi) {
        SWAP(*lo, *hi);
    }
}
