#pragma once

#include <stdexcept>
#include <string>

namespace cml {

// Base class for all library errors.  Everything recoverable is reported by
// throwing one of the subclasses below; numeric results are never silently
// patched up.
struct cml_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A constructor or routine received parameters outside its documented domain
// (expansion too weak, interval out of range, negative kernel weight, ...).
struct parameter_violation : cml_error {
    using cml_error::cml_error;
};

// The hole family does not satisfy the Markov dichotomy: some branch image
// neither contains nor avoids some interval, up to the decision tolerance.
struct markov_violation : cml_error {
    using cml_error::cml_error;
};

// The coupling symbol vanishes (or nearly vanishes) at a required frequency,
// so the lattice coupling operator is not invertible.
struct singular_coupling : cml_error {
    using cml_error::cml_error;
};

// The combined backward map is not a contraction, so cylinder points cannot
// be certified.  Raised when the weak-coupling check fails.
struct not_contracting : cml_error {
    using cml_error::cml_error;
};

// An iterative solve failed to meet its tolerance within the iteration cap.
struct no_convergence : cml_error {
    using cml_error::cml_error;
};

// The localization fit could not produce a valid geometric envelope.
struct fit_failure : cml_error {
    using cml_error::cml_error;
};

// An exact integer count exceeds the representable range.
struct count_overflow : cml_error {
    using cml_error::cml_error;
};

// An enumeration would exceed the configured work budget.
struct budget_exceeded : cml_error {
    using cml_error::cml_error;
};

// Every particle left the hold set in a single step; the survival trace
// cannot be continued.
struct extinction : cml_error {
    using cml_error::cml_error;
};

// A survival trace contains too little usable data for a rate fit.
struct degenerate_trace : cml_error {
    using cml_error::cml_error;
};

} // namespace cml
