#pragma once

#include "kinex/vec.hpp"

#include <vector>

namespace kinex {

/// Uniform Cartesian node-centered velocity grid on [-v_max, v_max]^n with
/// midpoint quadrature weight h^n per node. N_v must be even so the origin
/// falls between nodes and no node sits exactly at zero speed.
class VelocityGrid {
  public:
    VelocityGrid() = default;
    VelocityGrid(int n, int N_v, double v_max);

    int dim() const { return n_; }
    int per_axis() const { return N_v_; }
    double vmax() const { return v_max_; }
    double spacing() const { return h_; }
    int total() const { return total_; }
    double weight() const { return w_; }  // h^n

    double coord(int k) const { return -v_max_ + (k + 0.5) * h_; }
    const Vec3& node(int idx) const { return nodes_[static_cast<std::size_t>(idx)]; }
    double node_sq(int idx) const { return nsq_[static_cast<std::size_t>(idx)]; }

    int flat(int k0, int k1, int k2) const { return k0 + N_v_ * (k1 + N_v_ * k2); }
    void unflat(int idx, int k[3]) const;

  private:
    int n_ = 1;
    int N_v_ = 0;
    double v_max_ = 0.0;
    double h_ = 0.0;
    int total_ = 0;
    double w_ = 0.0;
    std::vector<Vec3> nodes_;
    std::vector<double> nsq_;
};

} // namespace kinex
