#pragma once

#include <cstdint>
#include <vector>

#include "burst/time_grid.hpp"

namespace burst {

// A function on the grid points, in exact bytes. Arrival functions, departure
// functions, service curves and envelopes are all Curves by role. The usual
// role invariants (values[0] == 0, nondecreasing) are validated where a role
// demands them, not in the constructor: min-plus deconvolution legitimately
// produces values[0] > 0 for unrelated operands.
struct Curve {
    TimeGrid grid;
    std::vector<std::uint64_t> values;  // one per grid point (bin_count + 1)

    Curve() = default;
    Curve(TimeGrid g, std::vector<std::uint64_t> v) : grid(g), values(std::move(v)) {
        if (static_cast<std::int64_t>(values.size()) != grid.point_count())
            throw InvariantError("Curve: values size must equal grid point count");
    }

    static Curve zeros(TimeGrid g) {
        return Curve(g, std::vector<std::uint64_t>(g.point_count(), 0));
    }

    std::int64_t points() const { return static_cast<std::int64_t>(values.size()); }
    std::uint64_t back() const { return values.empty() ? 0 : values.back(); }

    bool nondecreasing() const {
        for (std::size_t i = 1; i < values.size(); ++i)
            if (values[i] < values[i - 1]) return false;
        return true;
    }
    bool starts_at_zero() const { return !values.empty() && values.front() == 0; }

    void require_role_invariants(const char* role) const {
        if (!starts_at_zero())
            throw InvariantError(std::string(role) + ": values[0] must be 0");
        if (!nondecreasing())
            throw InvariantError(std::string(role) + ": values must be nondecreasing");
    }

    // Bytes that fall in bin k, i.e. between points k and k+1.
    std::uint64_t bin_bytes(std::int64_t k) const { return values[k + 1] - values[k]; }

    bool operator==(const Curve&) const = default;
};

inline void require_same_grid(const Curve& f, const Curve& g, const char* op) {
    if (!(f.grid == g.grid))
        throw InvariantError(std::string(op) + ": operands must share one grid");
}

}  // namespace burst
