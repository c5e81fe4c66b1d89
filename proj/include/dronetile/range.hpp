#pragma once

namespace dronetile {

/// Closed interval of a sampled parameter.
struct Range {
    double min = 0.0;
    double max = 0.0;
};

}  // namespace dronetile
