#pragma once

namespace qws {

// Oracle call counters mirroring the Setup/Update/Check cost model, plus a
// separate Shift counter. "Update-level" cost counts Shift alongside V and
// its adjoint, since a walk step spends one of each kind.
struct CostLedger {
    long long setup_calls = 0;
    long long update_calls = 0; // V and V^dagger applications of the base chain
    long long check_calls = 0;
    long long shift_calls = 0;

    long long update_level() const { return update_calls + shift_calls; }

    CostLedger& operator+=(const CostLedger& other) {
        setup_calls += other.setup_calls;
        update_calls += other.update_calls;
        check_calls += other.check_calls;
        shift_calls += other.shift_calls;
        return *this;
    }

    friend bool operator==(const CostLedger&, const CostLedger&) = default;
};

} // namespace qws
