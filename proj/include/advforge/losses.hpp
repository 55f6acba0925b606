#pragma once

#include <string>
#include <vector>

#include "advforge/filters.hpp"
#include "advforge/image.hpp"

namespace advforge::losses {

// The four attack objectives.
enum class Vector { HA, AA, NTA, TA };

std::string vector_name(Vector v);
Vector vector_from_name(const std::string& name); // "ha" | "aa" | "nta" | "ta"

// A loss value with its gradients toward the filtered rows. d_p[j] is the
// derivative with respect to P[j]; d_v[j][z] with respect to V[j][z].
struct LossResult {
    double value = 0.0;
    std::vector<double> d_p;
    std::vector<std::vector<double>> d_v;
};

// Per-row reciprocal terms without the c / row-count normalization. The
// training loop accumulates these across the transformation batch and scales
// by c over the total selected row count.
struct RowTerms {
    double sum = 0.0;
    std::vector<double> d_p;
    std::vector<std::vector<double>> d_v;
};
// literal_suppression switches the targeted loss to suppress every class
// except the target (instead of excluding the source class as well).
RowTerms raw_terms(Vector vec, const filters::FilterOutput& f, int source, int target,
                   bool literal_suppression = false);

// Hiding: push objectness down everywhere near the sign.
//   value = (c / k) * sum_j 1/(1 - P_j) + l2
LossResult loss_hiding(const filters::FilterOutput& f, double c, double l2);

// Appearance: make noise be detected as the target class (no l2 term).
//   value = (c / k) * sum_j 1/(P_j * V_j[target])
LossResult loss_appearance(const filters::FilterOutput& f, double c, int target);

// Non-targeted misclassification: keep detection, kill the source class.
//   value = (c / k) * sum_j (1/P_j + 1/(1 - V_j[source])) + l2
LossResult loss_nontarget(const filters::FilterOutput& f, double c, int source, double l2);

// Targeted misclassification: keep detection, boost target, suppress the rest.
//   value = (c / k) * sum_j (1/P_j + 1/V_j[target] + sum_{z excluded} 1/(1 - V_j[z])) + l2
LossResult loss_target(const filters::FilterOutput& f, double c, int source, int target,
                       double l2, bool literal_suppression = false);

// Squared perturbation size over masked pixels (all 3 channels).
double l2_distance(const imaging::Image& x, const imaging::Image& x_adv,
                   const imaging::Mask& mask);
// Gradient of l2_distance with respect to x_adv.
imaging::Image l2_distance_grad(const imaging::Image& x, const imaging::Image& x_adv,
                                const imaging::Mask& mask);

} // namespace advforge::losses
