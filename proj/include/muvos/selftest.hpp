#pragma once

#include <string>
#include <vector>

namespace muvos {

struct SelftestCheck {
    std::string name;
    bool passed = false;
    std::string detail;  // measured error or mismatch count
};

/// Fast oracle checks: parallel kernels against their serial references, analytic
/// gradients against central differences, and the dilation boundary F against the
/// exact bipartite matching. Deterministic for a given seed.
std::vector<SelftestCheck> run_selftest(unsigned long long seed = 0);

}  // namespace muvos
