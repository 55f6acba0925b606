#include "advforge/losses.hpp"

#include <algorithm>

#include "advforge/common.hpp"

namespace advforge::losses {

namespace {

constexpr double kEps = 1e-6;

// Clamped probability and a 0/1 factor gating the derivative where the clamp
// is active (the clamped function is flat there).
struct Clamped {
    double p;
    double gate;
};

Clamped clamp_prob(double p) {
    if (p < kEps) return {kEps, 0.0};
    if (p > 1.0 - kEps) return {1.0 - kEps, 0.0};
    return {p, 1.0};
}

void check_labels(const filters::FilterOutput& f, int source, int target, bool need_source,
                  bool need_target) {
    if (f.P.empty()) throw InvalidInput("loss requires at least one filtered row");
    if (f.V.size() != f.P.size()) throw InvalidInput("filter output V/P size mismatch");
    const int n = int(f.V.front().size());
    if (need_source && (source < 0 || source >= n))
        throw InvalidInput("source_label out of class range");
    if (need_target && (target < 0 || target >= n))
        throw InvalidInput("target_label out of class range");
    if (need_source && need_target && source == target)
        throw InvalidInput("source_label and target_label must differ");
}

} // namespace

std::string vector_name(Vector v) {
    switch (v) {
        case Vector::HA: return "ha";
        case Vector::AA: return "aa";
        case Vector::NTA: return "nta";
        default: return "ta";
    }
}

Vector vector_from_name(const std::string& name) {
    if (name == "ha") return Vector::HA;
    if (name == "aa") return Vector::AA;
    if (name == "nta") return Vector::NTA;
    if (name == "ta") return Vector::TA;
    throw InvalidInput("unknown attack vector: " + name + " (expected ha|aa|nta|ta)");
}

RowTerms raw_terms(Vector vec, const filters::FilterOutput& f, int source, int target,
                   bool literal_suppression) {
    const bool need_source = (vec == Vector::NTA || vec == Vector::TA);
    const bool need_target = (vec == Vector::AA || vec == Vector::TA);
    check_labels(f, source, target, need_source, need_target);
    const int k = f.k();
    const int n = int(f.V.front().size());
    RowTerms out;
    out.d_p.assign(k, 0.0);
    out.d_v.assign(k, std::vector<double>(n, 0.0));
    for (int j = 0; j < k; ++j) {
        const Clamped p = clamp_prob(f.P[j]);
        switch (vec) {
            case Vector::HA: {
                const double inv = 1.0 / (1.0 - p.p);
                out.sum += inv;
                out.d_p[j] = p.gate * inv * inv;
                break;
            }
            case Vector::AA: {
                const Clamped v = clamp_prob(f.V[j][target]);
                const double inv = 1.0 / (p.p * v.p);
                out.sum += inv;
                out.d_p[j] = -p.gate * inv / p.p;
                out.d_v[j][target] = -v.gate * inv / v.p;
                break;
            }
            case Vector::NTA: {
                const Clamped v = clamp_prob(f.V[j][source]);
                out.sum += 1.0 / p.p + 1.0 / (1.0 - v.p);
                out.d_p[j] = -p.gate / (p.p * p.p);
                out.d_v[j][source] = v.gate / ((1.0 - v.p) * (1.0 - v.p));
                break;
            }
            case Vector::TA: {
                const Clamped vt = clamp_prob(f.V[j][target]);
                out.sum += 1.0 / p.p + 1.0 / vt.p;
                out.d_p[j] = -p.gate / (p.p * p.p);
                out.d_v[j][target] = -vt.gate / (vt.p * vt.p);
                for (int z = 0; z < n; ++z) {
                    if (z == target) continue;
                    if (z == source && !literal_suppression) continue;
                    const Clamped vz = clamp_prob(f.V[j][z]);
                    out.sum += 1.0 / (1.0 - vz.p);
                    out.d_v[j][z] = vz.gate / ((1.0 - vz.p) * (1.0 - vz.p));
                }
                break;
            }
        }
    }
    return out;
}

namespace {

LossResult finalize(RowTerms raw, double c, double l2, int k) {
    if (!(c > 0.0)) throw InvalidInput("loss weight c must be positive");
    const double scale = c / double(k);
    LossResult out;
    out.value = scale * raw.sum + l2;
    out.d_p = std::move(raw.d_p);
    out.d_v = std::move(raw.d_v);
    for (double& g : out.d_p) g *= scale;
    for (auto& row : out.d_v)
        for (double& g : row) g *= scale;
    return out;
}

} // namespace

LossResult loss_hiding(const filters::FilterOutput& f, double c, double l2) {
    return finalize(raw_terms(Vector::HA, f, -1, -1), c, l2, f.k());
}

LossResult loss_appearance(const filters::FilterOutput& f, double c, int target) {
    return finalize(raw_terms(Vector::AA, f, -1, target), c, 0.0, f.k());
}

LossResult loss_nontarget(const filters::FilterOutput& f, double c, int source, double l2) {
    return finalize(raw_terms(Vector::NTA, f, source, -1), c, l2, f.k());
}

LossResult loss_target(const filters::FilterOutput& f, double c, int source, int target,
                       double l2, bool literal_suppression) {
    return finalize(raw_terms(Vector::TA, f, source, target, literal_suppression), c, l2, f.k());
}

double l2_distance(const imaging::Image& x, const imaging::Image& x_adv,
                   const imaging::Mask& mask) {
    if (!x.same_shape(x_adv) || x.h != mask.h || x.w != mask.w)
        throw InvalidInput("l2_distance dimension mismatch");
    double sum = 0.0;
    for (int y = 0; y < x.h; ++y)
        for (int xx = 0; xx < x.w; ++xx) {
            if (!mask.at(y, xx)) continue;
            for (int c = 0; c < 3; ++c) {
                const double d = x.at(c, y, xx) - x_adv.at(c, y, xx);
                sum += d * d;
            }
        }
    return sum;
}

imaging::Image l2_distance_grad(const imaging::Image& x, const imaging::Image& x_adv,
                                const imaging::Mask& mask) {
    if (!x.same_shape(x_adv) || x.h != mask.h || x.w != mask.w)
        throw InvalidInput("l2_distance dimension mismatch");
    imaging::Image g(x.h, x.w, 0.0);
    for (int y = 0; y < x.h; ++y)
        for (int xx = 0; xx < x.w; ++xx) {
            if (!mask.at(y, xx)) continue;
            for (int c = 0; c < 3; ++c)
                g.at(c, y, xx) = 2.0 * (x_adv.at(c, y, xx) - x.at(c, y, xx));
        }
    return g;
}

} // namespace advforge::losses
