#include "core/types.hpp"

#include <stdexcept>

namespace ndbft {

std::string mask_name(NdTypeMask m) {
    if (m == 0) return "0";
    std::string s;
    auto add = [&](const char* name) {
        if (!s.empty()) s += "|";
        s += name;
    };
    if (m & kNdVpre) add("VPRE");
    if (m & kNdNpre) add("NPRE");
    if (m & kNdVpost) add("VPOST");
    if (m & kNdNpost) add("NPOST");
    return s;
}

NdTypeMask mask_from_name(const std::string& s) {
    if (s == "0" || s.empty()) return 0;
    NdTypeMask m = 0;
    size_t start = 0;
    while (start <= s.size()) {
        size_t bar = s.find('|', start);
        std::string part = s.substr(start, bar == std::string::npos ? bar : bar - start);
        if (part == "VPRE")
            m |= kNdVpre;
        else if (part == "NPRE")
            m |= kNdNpre;
        else if (part == "VPOST")
            m |= kNdVpost;
        else if (part == "NPOST")
            m |= kNdNpost;
        else
            throw std::invalid_argument("unknown nondeterminism class: " + part);
        if (bar == std::string::npos) break;
        start = bar + 1;
    }
    return m;
}

}  // namespace ndbft
