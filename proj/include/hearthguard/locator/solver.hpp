#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "hearthguard/error.hpp"
#include "hearthguard/locator/geometry.hpp"
#include "hearthguard/locator/ranging.hpp"

namespace hearthguard::locator {

struct SolveOptions {
    double wearHeight = 1.2;  // z used when the anchors cannot resolve height
    int maxIterations = 100;
    double stepTolerance = 1e-9;
    double initialDamping = 1e-3;
};

struct SolveResult {
    Position position;
    double residualNorm = 0.0;  // sqrt of the sum of squared range residuals
    bool converged = false;
    bool outsideRoom = false;
    int iterations = 0;
    std::vector<double> objective;  // sum of squares after each accepted step, starting with the initial guess
};

namespace detail {

struct Observation {
    Eigen::Vector3d anchor;
    double range;
};

inline double objective(const std::vector<Observation>& obs, const Eigen::Vector3d& p) {
    double s = 0.0;
    for (const auto& o : obs) {
        const double r = (p - o.anchor).norm() - o.range;
        s += r * r;
    }
    return s;
}

}  // namespace detail

/// Levenberg-Marquardt fit of sum_i (|p - a_i| - r_i)^2.
///
/// With three ranges, or anchors all at one height, z is held at the wear height
/// and only x, y are estimated. A non-converged result carries the best iterate.
inline SolveResult solve_position(const RangeSet& ranges, const AnchorSet& anchors,
                                  std::optional<Position> initial = std::nullopt, const SolveOptions& opt = {}) {
    if (ranges.size() < 3) throw InsufficientAnchors("at least 3 ranges are required");
    anchors.validate();

    std::vector<detail::Observation> obs;
    obs.reserve(ranges.size());
    for (const auto& m : ranges) {
        const Anchor* a = anchors.find(m.anchorId);
        if (!a) throw InsufficientAnchors("range refers to unknown anchor '" + m.anchorId + "'");
        if (!(m.range >= 0.0) || !std::isfinite(m.range)) throw std::invalid_argument("ranges must be finite and >= 0");
        obs.push_back({{a->position.x, a->position.y, a->position.z}, m.range});
    }

    const bool planar = ranges.size() == 3 || anchors.coplanar_horizontal();
    const int n = planar ? 2 : 3;

    const Position start = initial.value_or(anchors.room.center());
    Eigen::Vector3d p(start.x, start.y, planar ? opt.wearHeight : start.z);

    SolveResult res;
    double f = detail::objective(obs, p);
    res.objective.push_back(f);
    double lambda = opt.initialDamping;

    const auto m = static_cast<Eigen::Index>(obs.size());
    Eigen::MatrixXd J(m, n);
    Eigen::VectorXd r(m);

    for (res.iterations = 0; res.iterations < opt.maxIterations;) {
        ++res.iterations;
        for (Eigen::Index i = 0; i < m; ++i) {
            const Eigen::Vector3d d = p - obs[i].anchor;
            const double len = d.norm();
            r(i) = len - obs[i].range;
            if (len > 1e-12)
                J.row(i) = (d / len).head(n).transpose();
            else
                J.row(i).setZero();
        }
        const Eigen::MatrixXd A = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;
        Eigen::MatrixXd damped = A;
        for (int k = 0; k < n; ++k) damped(k, k) += lambda * std::max(A(k, k), 1e-12);
        const Eigen::VectorXd delta = damped.ldlt().solve(-g);

        Eigen::Vector3d candidate = p;
        candidate.head(n) += delta;
        const double fc = detail::objective(obs, candidate);
        const double step = delta.norm();

        if (std::isfinite(fc) && fc <= f) {
            p = candidate;
            f = fc;
            res.objective.push_back(f);
            lambda = std::max(lambda / 10.0, 1e-12);
        } else {
            lambda *= 10.0;
        }
        if (!std::isfinite(step) || step < opt.stepTolerance || f == 0.0) {
            res.converged = std::isfinite(step);
            break;
        }
    }

    res.position = {p.x(), p.y(), p.z()};
    res.residualNorm = std::sqrt(f);
    res.outsideRoom = !anchors.room.contains(res.position);
    return res;
}

/// One trace row per epoch: epoch,x,y,z,residual.
inline void write_trace_header(std::ostream& os) { os << "epoch,x,y,z,residual\n"; }

inline void write_trace_row(std::ostream& os, long epoch, const SolveResult& r) {
    os << epoch << ',' << r.position.x << ',' << r.position.y << ',' << r.position.z << ',' << r.residualNorm << '\n';
}

}  // namespace hearthguard::locator
