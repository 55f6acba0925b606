#pragma once

#include <string>
#include <vector>

#include "advforge/attack.hpp"
#include "advforge/evaluation.hpp"

namespace advforge::toolkit {

// Parsed run configuration. The profile fixes the detector geometry and the
// embedding size bands; the attack block starts from the per-vector defaults
// and applies file overrides on top.
struct RunConfig {
    int schema = 1;
    std::string profile = "toy"; // toy | full
    uint64_t seed = 7;
    std::string checkpoint;              // detector checkpoint path
    std::string backgrounds = "procedural:64"; // directory or procedural:<count>
    std::string mask_spec = "default";   // default | disc | full | <png path>
    attack::AttackConfig attack = attack::AttackConfig::defaults_for(losses::Vector::HA);
    evaluation::GridSpec grid;
    int holdout_pairs = 500;

    detect::DetectorConfig detector_config() const;
    void validate() const;
};

// Key = value sections ([run], [attack], [grid]) with a top-level `schema`
// line. Unknown keys and malformed values raise errors naming the field; the
// whole file is parsed and validated before anything runs. A non-empty
// vector_override (CLI flag) replaces the file's attack.vector and picks the
// per-vector defaults before the file overrides apply.
RunConfig load_config(const std::string& path, const std::string& vector_override = "");

// Resolves the mask specification against a patch size. "default" returns an
// empty mask (the attack picks its own), "disc"/"full" build the named shapes,
// anything else is read as a mask PNG.
imaging::Mask resolve_mask(const std::string& spec, int patch_size);

// Background corpus: procedural:<n> renders n frames from the seed; otherwise
// the spec is a directory whose *.png files are loaded in name order.
std::vector<imaging::Image> load_backgrounds(const std::string& spec, int frame_size,
                                             uint64_t seed);

} // namespace advforge::toolkit
