#include "wavelat/wavelet_unit.hpp"

#include <string>

#include "wavelat/errors.hpp"

namespace wavelat {

UnitMode parse_unit_mode(std::string_view name) {
    if (name == "pool") return UnitMode::pool;
    if (name == "conv_replace") return UnitMode::conv_replace;
    if (name == "downsample") return UnitMode::downsample;
    throw ConfigError("unknown unit mode '" + std::string(name) +
                      "' (expected pool, conv_replace or downsample)");
}

std::string_view unit_mode_name(UnitMode mode) {
    switch (mode) {
        case UnitMode::pool: return "pool";
        case UnitMode::conv_replace: return "conv_replace";
        case UnitMode::downsample: return "downsample";
    }
    return "pool";
}

}  // namespace wavelat
