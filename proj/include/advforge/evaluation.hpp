#pragma once

#include <string>
#include <utility>
#include <vector>

#include "advforge/attack.hpp"
#include "advforge/detector.hpp"

namespace advforge::evaluation {

using losses::Vector;

// Detector outcome for one frame, reduced to the judgement inputs: Z is the
// score (max class confidence x objectness) of the best detection overlapping
// the known sign box; top_class is its class, -1 when nothing overlaps.
struct FramePrediction {
    double z = 0.0;
    int top_class = -1;
    int cell_id = -1; // pairing guard for grid evaluation
};

struct Verdict {
    bool counts = false;  // frame enters N_a
    bool success = false; // frame enters N_s

    bool operator==(const Verdict&) const = default;
};

// Attack-success rule per vector at threshold th. Throws when the paired
// frames carry different cell ids.
Verdict judge_frame(Vector vec, const FramePrediction& clean, const FramePrediction& adv,
                    int y, int y_prime, double th = 0.25);

FramePrediction extract_prediction(const detect::Detector& model, const imaging::Image& frame,
                                   const geometry::BBox& bbox_real, int cell_id = -1,
                                   double det_conf = 0.001, double det_nms = 0.45,
                                   double overlap_iou = 0.25);

// Simulated drive-by protocol: distance controls apparent size, viewing angle
// controls perspective squeeze, illumination presets control photometrics.
struct GridSpec {
    std::vector<std::pair<double, double>> distance_bins = {
        {0, 10}, {10, 15}, {15, 20}, {20, 25}, {25, 30}}; // meters
    std::vector<std::pair<double, double>> angle_bins = {
        {-60, -36}, {-36, -12}, {-12, 12}, {12, 36}, {36, 60}}; // degrees
    std::vector<std::string> illuminations = {"sunny", "cloudy", "night"};
    int frames_per_cell = 200;
    double th = 0.25;
    double rho0 = 1.5;                    // meters-to-ratio calibration (15 m -> 0.1)
    double ratio_min = 0.1, ratio_max = 0.6; // clamp range for the apparent size
    bool night_glare = false;             // specular ellipse on night frames
    uint64_t seed = 99;

    void validate() const;
};

// Apparent sign size as a fraction of the frame at distance d meters.
double distance_ratio(double d, double rho0, double ratio_min, double ratio_max);

struct CellResult {
    std::pair<double, double> distance_bin;
    std::pair<double, double> angle_bin;
    std::string illumination;
    long n_a = 0;
    long n_s = 0;
    double r_s() const { return n_a > 0 ? double(n_s) / double(n_a) : 0.0; }
};

// Raw per-frame stream, emitted so confidence curves can be reconstructed.
struct FrameRecord {
    int cell_id = 0;
    double z_clean = 0.0, z_adv = 0.0;
    int class_clean = -1, class_adv = -1;
    bool counts = false, success = false;
};

// Renders paired clean/attacked frames per cell and judges each pair.
// Deterministic per-cell seeding; cells may evaluate in parallel.
std::vector<CellResult> drive_by_grid(const attack::PatchArtifact& patch,
                                      const detect::Detector& model, const GridSpec& spec,
                                      const std::vector<imaging::Image>& backgrounds,
                                      std::vector<FrameRecord>* records = nullptr);

// Success rate over freshly drawn (background, placement, transform) pairs
// from the attack's own sampling distribution; backgrounds are procedural
// from the given seed, so any seed unused by training gives held-out pairs.
struct PairStats {
    long n_a = 0;
    long n_s = 0;
    double r_s() const { return n_a > 0 ? double(n_s) / double(n_a) : 0.0; }
};
PairStats success_rate_over_pairs(const attack::PatchArtifact& patch,
                                  const detect::Detector& model, int pairs, uint64_t seed,
                                  double th = 0.25);

// CSV with header distance_bin,angle_bin,illumination,N_a,N_s,R_s; bins are
// formatted lo..hi. parse_report round-trips emit_report's output.
void emit_report(const std::vector<CellResult>& cells, const std::string& csv_path);
std::vector<CellResult> parse_report(const std::string& csv_path);

// R_s heatmap (distance columns, angle rows) for one illumination.
void render_heatmap(const std::vector<CellResult>& cells, const std::string& illumination,
                    const std::string& png_path);

} // namespace advforge::evaluation
