#pragma once

// Rest points of a replicator system: face-by-face damped Newton from a
// deterministic start grid, degenerate-line detection by face sampling, and
// stability from the finite-difference Jacobian in reduced coordinates.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "pairdyn/error.hpp"
#include "pairdyn/replicator.hpp"

namespace pairdyn {

enum class EqKind { Vertex, Edge, Face, Interior, LineSegment, DegenerateFace };
enum class Stability { Unknown, Stable, Unstable, Saddle, Degenerate, DegenerateLine };

inline std::string to_string(EqKind k) {
    switch (k) {
        case EqKind::Vertex: return "vertex";
        case EqKind::Edge: return "edge";
        case EqKind::Face: return "face";
        case EqKind::Interior: return "interior";
        case EqKind::LineSegment: return "line_segment";
        default: return "degenerate_face";
    }
}

inline std::string to_string(Stability s) {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Unstable: return "unstable";
        case Stability::Saddle: return "saddle";
        case Stability::Degenerate: return "degenerate";
        case Stability::DegenerateLine: return "degenerate_line";
        default: return "unknown";
    }
}

struct LineSample {
    Eigen::VectorXd point;
    double transverse = 0.0;  // largest real part of the transverse Jacobian
    bool stable = false;
};

struct Equilibrium {
    Eigen::VectorXd point;
    EqKind kind = EqKind::Interior;
    Stability stability = Stability::Unknown;
    std::vector<std::complex<double>> eigenvalues;
    std::vector<int> support;         // strategies present on the face
    std::vector<LineSample> samples;  // line segments only
};

struct EquilibriumOptions {
    int grid = 32;                // multi-start resolution 1/grid per coordinate
    double merge_tol = 1e-6;      // L-inf distance under which roots are merged
    double residual_tol = 1e-8;   // accepted ||rhs||_inf at a root
    double line_tol = 1e-10;      // face counts as degenerate when every sample is below this
    int line_samples = 33;
    int max_newton = 60;
    double fd_step = 1e-6;
    double stability_margin = 1e-7;
};

namespace detail {

inline Eigen::VectorXd embed(const std::vector<int>& face, const Eigen::VectorXd& y, Eigen::Index n) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    double rest = 1.0;
    for (Eigen::Index a = 0; a < y.size(); ++a) {
        x(face[static_cast<std::size_t>(a)]) = y(a);
        rest -= y(a);
    }
    x(face.back()) = rest;
    return x;
}

inline Eigen::VectorXd face_residual(const ReplicatorSystem& sys, const std::vector<int>& face, const Eigen::VectorXd& y) {
    const Eigen::VectorXd v = sys.rhs_unchecked(embed(face, y, sys.n()));
    Eigen::VectorXd f(y.size());
    for (Eigen::Index a = 0; a < y.size(); ++a) f(a) = v(face[static_cast<std::size_t>(a)]);
    return f;
}

inline bool inside_face(const Eigen::VectorXd& y, double slack = 1e-12) {
    return y.minCoeff() >= -slack && y.sum() <= 1.0 + slack;
}

inline void grid_points(int dim, int grid, std::vector<Eigen::VectorXd>& out) {
    std::vector<int> idx(static_cast<std::size_t>(dim), 1);
    auto emit = [&](auto&& self, int pos, int used) -> void {
        if (pos == dim) {
            if (used < grid) {
                Eigen::VectorXd y(dim);
                for (int a = 0; a < dim; ++a) y(a) = idx[static_cast<std::size_t>(a)] / static_cast<double>(grid);
                out.push_back(y);
            }
            return;
        }
        for (int v = 1; used + v < grid; ++v) {
            idx[static_cast<std::size_t>(pos)] = v;
            self(self, pos + 1, used + v);
        }
    };
    emit(emit, 0, 0);
}

inline bool damped_newton(const ReplicatorSystem& sys, const std::vector<int>& face, Eigen::VectorXd& y,
                          const EquilibriumOptions& opt) {
    const auto dim = y.size();
    Eigen::VectorXd f = face_residual(sys, face, y);
    double norm = f.cwiseAbs().maxCoeff();
    const double h = 1e-7;
    for (int it = 0; it < opt.max_newton; ++it) {
        if (norm < 1e-14) return true;
        Eigen::MatrixXd jac(dim, dim);
        for (Eigen::Index b = 0; b < dim; ++b) {
            Eigen::VectorXd yp = y, ym = y;
            yp(b) += h;
            ym(b) -= h;
            jac.col(b) = (face_residual(sys, face, yp) - face_residual(sys, face, ym)) / (2 * h);
        }
        const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-f);
        if (!step.allFinite()) return false;
        double lambda = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 30; ++ls, lambda *= 0.5) {
            const Eigen::VectorXd yn = y + lambda * step;
            if (!inside_face(yn, 1e-9)) continue;
            const Eigen::VectorXd fn = face_residual(sys, face, yn);
            const double nn = fn.cwiseAbs().maxCoeff();
            if (nn < norm) {
                y = yn;
                f = fn;
                const double moved = (lambda * step).cwiseAbs().maxCoeff();
                norm = nn;
                improved = true;
                if (moved < 1e-15) return norm < opt.residual_tol;
                break;
            }
        }
        if (!improved) return norm < opt.residual_tol;
    }
    return norm < opt.residual_tol;
}

inline std::vector<int> support_of(const Eigen::VectorXd& x, double tol = 1e-9) {
    std::vector<int> s;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x(i) > tol) s.push_back(static_cast<int>(i));
    return s;
}

inline EqKind kind_for_support(std::size_t s, Eigen::Index n) {
    if (s == 1) return EqKind::Vertex;
    if (static_cast<Eigen::Index>(s) == n) return EqKind::Interior;
    if (s == 2) return EqKind::Edge;
    return EqKind::Face;
}

// Deterministic sample points on a face: evenly spaced on edges, a lattice otherwise.
inline std::vector<Eigen::VectorXd> face_samples(const std::vector<int>& face, Eigen::Index n, int count) {
    std::vector<Eigen::VectorXd> pts;
    const int dim = static_cast<int>(face.size()) - 1;
    if (dim == 1) {
        for (int m = 0; m < count; ++m) {
            Eigen::VectorXd y(1);
            y(0) = m / static_cast<double>(count - 1);
            pts.push_back(embed(face, y, n));
        }
        return pts;
    }
    int grid = 2;
    std::vector<Eigen::VectorXd> ys;
    while (true) {
        ys.clear();
        grid_points(dim, grid, ys);
        if (static_cast<int>(ys.size()) >= count) break;
        ++grid;
    }
    for (int m = 0; m < count; ++m) pts.push_back(embed(face, ys[static_cast<std::size_t>(m) * ys.size() / count], n));
    return pts;
}

}  // namespace detail

// Jacobian in the n-1 coordinates that remain after eliminating the largest
// component. Central differences, or a second-order forward formula where the
// backward point would leave the simplex.
inline Eigen::MatrixXd reduced_jacobian(const ReplicatorSystem& sys, const Eigen::VectorXd& x, double h = 1e-6) {
    const auto n = x.size();
    Eigen::Index pivot = 0;
    x.maxCoeff(&pivot);
    std::vector<Eigen::Index> coords;
    for (Eigen::Index i = 0; i < n; ++i)
        if (i != pivot) coords.push_back(i);
    const auto m = static_cast<Eigen::Index>(coords.size());
    Eigen::MatrixXd jac(m, m);
    auto shifted = [&](Eigen::Index c, double d) {
        Eigen::VectorXd y = x;
        y(c) += d;
        y(pivot) -= d;
        return sys.rhs_unchecked(y);
    };
    for (Eigen::Index b = 0; b < m; ++b) {
        const Eigen::Index c = coords[static_cast<std::size_t>(b)];
        Eigen::VectorXd col;
        if (x(c) >= h) {
            col = (shifted(c, h) - shifted(c, -h)) / (2 * h);
        } else {
            col = (-3.0 * sys.rhs_unchecked(x) + 4.0 * shifted(c, h) - shifted(c, 2 * h)) / (2 * h);
        }
        for (Eigen::Index a = 0; a < m; ++a) jac(a, b) = col(coords[static_cast<std::size_t>(a)]);
    }
    return jac;
}

inline Stability stability_from(const std::vector<std::complex<double>>& ev, double margin) {
    bool pos = false, neg_all = true;
    for (const auto& e : ev) {
        if (e.real() > margin) pos = true;
        if (e.real() >= -margin) neg_all = false;
    }
    if (pos) {
        for (const auto& e : ev)
            if (e.real() < -margin) return Stability::Saddle;
        return Stability::Unstable;
    }
    return neg_all ? Stability::Stable : Stability::Degenerate;
}

inline std::vector<std::complex<double>> jacobian_eigenvalues(const Eigen::MatrixXd& jac) {
    std::vector<std::complex<double>> ev;
    if (jac.rows() == 0) return ev;
    Eigen::EigenSolver<Eigen::MatrixXd> es(jac, false);
    if (es.info() != Eigen::Success) throw NumericalError("eigenvalue solver failed");
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) ev.push_back(es.eigenvalues()(i));
    std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return ev;
}

// Largest real part of the Jacobian block for strategies absent at x, probed by
// moving mass h onto each absent strategy.
inline double transverse_growth(const ReplicatorSystem& sys, const Eigen::VectorXd& x, const std::vector<int>& support,
                                double h = 1e-6) {
    std::vector<int> absent;
    for (int i = 0; i < sys.n(); ++i)
        if (std::find(support.begin(), support.end(), i) == support.end()) absent.push_back(i);
    if (absent.empty()) return 0.0;
    const auto m = static_cast<Eigen::Index>(absent.size());
    Eigen::MatrixXd jt(m, m);
    for (Eigen::Index b = 0; b < m; ++b) {
        Eigen::VectorXd y = (1.0 - h) * x;
        y(absent[static_cast<std::size_t>(b)]) += h;
        const Eigen::VectorXd v = sys.rhs_unchecked(y);
        for (Eigen::Index a = 0; a < m; ++a) jt(a, b) = v(absent[static_cast<std::size_t>(a)]) / h;
    }
    double best = -INFINITY;
    for (const auto& e : jacobian_eigenvalues(jt)) best = std::max(best, e.real());
    return best;
}

inline Equilibrium classify_stability(const ReplicatorSystem& sys, Equilibrium eq, const EquilibriumOptions& opt = {}) {
    if (eq.kind == EqKind::LineSegment || eq.kind == EqKind::DegenerateFace) {
        for (auto& s : eq.samples) {
            s.transverse = transverse_growth(sys, s.point, eq.support, opt.fd_step);
            s.stable = s.transverse < -opt.stability_margin;
        }
        eq.stability = Stability::DegenerateLine;
        return eq;
    }
    eq.eigenvalues = jacobian_eigenvalues(reduced_jacobian(sys, eq.point, opt.fd_step));
    eq.stability = stability_from(eq.eigenvalues, opt.stability_margin);
    return eq;
}

inline std::vector<Equilibrium> find_equilibria(const ReplicatorSystem& sys, const EquilibriumOptions& opt = {}) {
    const int n = sys.n();
    require(n <= 4, "exhaustive face scan supports at most 4 strategies");
    std::vector<Equilibrium> found;
    std::vector<std::vector<int>> degenerate_faces;

    auto covered = [&](const std::vector<int>& support) {
        for (const auto& f : degenerate_faces)
            if (std::includes(f.begin(), f.end(), support.begin(), support.end()) && support.size() < f.size() + 1 &&
                support.size() >= 2)
                return true;
        return false;
    };
    auto add_point = [&](const Eigen::VectorXd& x) {
        const auto support = detail::support_of(x);
        if (covered(support)) return;
        for (const auto& e : found)
            if (e.kind != EqKind::LineSegment && e.kind != EqKind::DegenerateFace &&
                (e.point - x).cwiseAbs().maxCoeff() < opt.merge_tol)
                return;
        Equilibrium eq;
        eq.point = x;
        eq.support = support;
        eq.kind = detail::kind_for_support(support.size(), n);
        found.push_back(eq);
    };

    // Faces ordered by dimension so degenerate lower faces are known before higher ones.
    std::vector<std::vector<int>> faces;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<int> f;
        for (int i = 0; i < n; ++i)
            if (mask & (1u << i)) f.push_back(i);
        faces.push_back(f);
    }
    std::stable_sort(faces.begin(), faces.end(), [](const auto& a, const auto& b) { return a.size() < b.size(); });

    for (const auto& face : faces) {
        if (face.size() == 1) {
            Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
            x(face[0]) = 1.0;
            add_point(x);
            continue;
        }
        bool flat = true;
        const auto samples = detail::face_samples(face, n, opt.line_samples);
        for (const auto& p : samples)
            if (sys.rhs_unchecked(p).cwiseAbs().maxCoeff() > opt.line_tol) {
                flat = false;
                break;
            }
        if (flat) {
            bool inside_larger = false;
            for (const auto& f : degenerate_faces)
                if (std::includes(f.begin(), f.end(), face.begin(), face.end())) inside_larger = true;
            if (inside_larger) continue;
            Equilibrium eq;
            eq.kind = face.size() == 2 ? EqKind::LineSegment : EqKind::DegenerateFace;
            eq.support = face;
            eq.point = Eigen::VectorXd::Zero(n);
            for (int i : face) eq.point(i) = 1.0 / static_cast<double>(face.size());
            for (const auto& p : samples) eq.samples.push_back(LineSample{p, 0.0, false});
            found.push_back(eq);
            degenerate_faces.push_back(face);
            continue;
        }
        const int dim = static_cast<int>(face.size()) - 1;
        std::vector<Eigen::VectorXd> starts;
        detail::grid_points(dim, opt.grid, starts);
        for (auto y : starts) {
            if (!detail::damped_newton(sys, face, y, opt)) continue;
            Eigen::VectorXd x = detail::embed(face, y, n);
            x = x.cwiseMax(0.0);
            x /= x.sum();
            if (sys.rhs_unchecked(x).cwiseAbs().maxCoeff() >= opt.residual_tol) continue;
            add_point(x);
        }
    }
    // Drop isolated points that sit on a degenerate face found later in the scan.
    std::vector<Equilibrium> out;
    for (auto& e : found) {
        if (e.kind != EqKind::LineSegment && e.kind != EqKind::DegenerateFace && e.support.size() >= 2 &&
            covered(e.support))
            continue;
        out.push_back(classify_stability(sys, std::move(e), opt));
    }
    return out;
}

}  // namespace pairdyn
