#include "kinex/velocity_grid.hpp"
#include "kinex/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace kinex {

VelocityGrid::VelocityGrid(int n, int N_v, double v_max)
    : n_(n), N_v_(N_v), v_max_(v_max) {
    if (n < 1 || n > 3)
        throw std::domain_error("VelocityGrid: n in {1,2,3} required");
    if (N_v < 2 || N_v % 2 != 0)
        throw std::domain_error("VelocityGrid: N_v must be even and >= 2");
    if (!(v_max > 0.0))
        throw std::domain_error("VelocityGrid: v_max > 0 required");
    h_ = 2.0 * v_max / N_v;
    total_ = 1;
    for (int d = 0; d < n; ++d) total_ *= N_v;
    w_ = std::pow(h_, n);

    nodes_.resize(static_cast<std::size_t>(total_));
    nsq_.resize(static_cast<std::size_t>(total_));
    int k[3] = {0, 0, 0};
    for (int idx = 0; idx < total_; ++idx) {
        unflat(idx, k);
        Vec3 v{};
        for (int d = 0; d < n; ++d) v[d] = coord(k[d]);
        nodes_[static_cast<std::size_t>(idx)] = v;
        nsq_[static_cast<std::size_t>(idx)] = norm2(v);
    }
}

void VelocityGrid::unflat(int idx, int k[3]) const {
    k[0] = idx % N_v_;
    int rest = idx / N_v_;
    k[1] = (n_ > 1) ? rest % N_v_ : 0;
    k[2] = (n_ > 2) ? rest / N_v_ : 0;
}

} // namespace kinex
