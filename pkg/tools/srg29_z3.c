/* Character matrices for srg(29,14,6,7) with an automorphism of order 3
 * fixing 5 points (8 orbits of length 3).
 *
 * For chi a nontrivial character of Z_3 the 8x8 Hermitian matrix
 * M_ij = chi(S_ij) must satisfy M^2 + M = 7I.  Row norms force every
 * off-diagonal entry to be a unit +-w^k and the diagonal to be 0 or -1.
 * Conjugating by a diagonal matrix of cube roots (translating an orbit) and
 * permuting orbits lets row 0 be real and sorted.
 *
 * Output: one line per matrix, 64 integers; diagonal entries are 0 (empty)
 * or 1 (the set {1,2}); off-diagonal entries are unit codes 0..5 meaning
 * sign * w^k with k = code % 3 and sign = code < 3 ? +1 : -1.
 */
#include <complex.h>
#include <math.h>
#include <stdio.h>

#define R 8
#define EPS 1e-7
static double complex unit[6];
static int code[R][R];
static double complex M[R][R];
static long count;

static int conj_code(int c) { return (c < 3 ? 0 : 3) + (3 - c % 3) % 3; }

static void put(int i, int j, int c) {
    code[i][j] = c; code[j][i] = conj_code(c);
    M[i][j] = unit[c]; M[j][i] = unit[code[j][i]];
}

static int check(int a, int b) {
    double complex s = M[a][b];
    for (int k = 0; k < R; k++) s += M[a][k] * M[k][b];
    if (a == b) s -= 7;
    return cabs(s) < EPS;
}

static void emit(void) {
    for (int i = 0; i < R; i++)
        for (int j = 0; j < R; j++)
            printf("%d%c", i == j ? (creal(M[i][i]) < -0.5) : code[i][j], (i == R - 1 && j == R - 1) ? '\n' : ' ');
    count++;
}

static void fill(int i, int j) {
    if (i == R) { emit(); return; }
    if (j == R) {
        for (int a = 0; a <= i; a++)
            if (!check(a, i)) return;
        fill(i + 1, i + 2);
        return;
    }
    if (j == i + 1 || j == i + 1) { /* diagonal of row i chosen on entry */ }
    for (int c = 0; c < 6; c++) {
        put(i, j, c);
        fill(i, j + 1);
    }
}

static void start_row(int i) {
    /* choose the diagonal entry, then the rest of the row */
    for (int d = 0; d < 2; d++) {
        M[i][i] = d ? -1 : 0;
        if (i == R - 1) {
            int ok = 1;
            for (int a = 0; a <= i && ok; a++) ok = check(a, i);
            if (ok) emit();
        } else {
            fill(i, i + 1);
        }
    }
}

int main(void) {
    for (int c = 0; c < 6; c++) unit[c] = (c < 3 ? 1 : -1) * cexp(2 * M_PI * I * (c % 3) / 3);
    /* row 0: diagonal d, then k entries +1 followed by -1 entries */
    for (int d = 0; d < 2; d++)
        for (int k = 0; k < R; k++) {
            M[0][0] = d ? -1 : 0;
            for (int j = 1; j < R; j++) put(0, j, j <= k ? 0 : 3);
            if (!check(0, 0)) continue;
            /* rows 1.. with their own diagonal choices */
            extern void rows(int);
            rows(1);
        }
    fprintf(stderr, "matrices %ld\n", count);
    return 0;
}

void rows(int i);
static void fill_row(int i, int j);

void rows(int i) {
    if (i == R) { emit(); return; }
    for (int d = 0; d < 2; d++) {
        M[i][i] = d ? -1 : 0;
        fill_row(i, i + 1);
    }
}

static void fill_row(int i, int j) {
    if (j == R) {
        for (int a = 0; a <= i; a++)
            if (!check(a, i)) return;
        rows(i + 1);
        return;
    }
    for (int c = 0; c < 6; c++) {
        put(i, j, c);
        fill_row(i, j + 1);
    }
}
