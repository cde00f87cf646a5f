#pragma once

#include <stdexcept>

#include "core/types.hpp"

namespace ndbft::ndc {

// Which protocol extensions a request's nondeterminism mask activates.
struct PhasePlan {
    bool carries_values_in_pre_prepare = false;  // VPRE values ride PRE_PREPARE
    bool needs_ppu_phase = false;                // NPRE share collection round
    bool needs_post_commit = false;              // postnd log + agreement rounds
    bool verify_post_values = false;             // VPOST application check

    bool operator==(const PhasePlan&) const = default;
};

inline PhasePlan plan_phases(NdTypeMask mask) {
    if (!mask_valid(mask))
        throw std::invalid_argument("nd mask has reserved bits set");
    PhasePlan p;
    p.carries_values_in_pre_prepare = mask_has(mask, kNdVpre);
    p.needs_ppu_phase = mask_has(mask, kNdNpre);
    p.needs_post_commit = mask_post(mask);
    p.verify_post_values = mask_has(mask, kNdVpost);
    return p;
}

}  // namespace ndbft::ndc
