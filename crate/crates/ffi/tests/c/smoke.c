#include <stdio.h>
#include <string.h>
#include "covariants.h"

#define CHECK(cond) do { if (!(cond)) { fprintf(stderr, "failed: %s\n", #cond); return 1; } } while (0)

int main(void) {
    uint64_t dim = 0;
    CHECK(cov_springer_dim(9, 60, 14, &dim) == COV_STATUS_OK && dim == 872368);

    size_t degrees[] = {4, 4, 8};
    int64_t q = 0;
    CHECK(cov_quotient_dim(9, 60, 14, degrees, 3, &q) == COV_STATUS_OK && q == 33360);

    CovCatalog *cat = NULL;
    CHECK(cov_catalog_load(9, &cat) == COV_STATUS_OK);
    size_t len = 0, d = 0, m = 0, needed = 0;
    CHECK(cov_catalog_len(cat, &len) == COV_STATUS_OK && len == 476);
    CHECK(cov_catalog_bidegree(cat, 1, &d, &m) == COV_STATUS_OK && d == 2 && m == 2);
    char label[8];
    CHECK(cov_catalog_label(cat, 1, label, sizeof label, &needed) == COV_STATUS_OK && strcmp(label, "c2") == 0);
    cov_catalog_free(cat);

    CHECK(cov_catalog_load(7, &cat) == COV_STATUS_UNSUPPORTED);
    CHECK(cov_last_error() != NULL);

    uint64_t lhs1[] = {2}, lhs2[] = {3};
    CovDioph *sol = NULL;
    CHECK(cov_dioph_solve(lhs1, 1, lhs2, 1, &sol) == COV_STATUS_OK);
    size_t count = 0;
    CHECK(cov_dioph_count(sol, &count) == COV_STATUS_OK && count == 6);
    cov_dioph_free(sol);
    printf("ok %s\n", cov_version());
    return 0;
}
