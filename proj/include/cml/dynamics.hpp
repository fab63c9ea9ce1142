#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "cml/coupling.hpp"
#include "cml/local_map.hpp"

namespace cml {

// A configuration on the periodic lattice Z_L; the length is the lattice size.
using lattice_state = std::vector<double>;

// One symbol per site.
using symbol_frame = std::vector<symbol>;

// Frames theta^0 .. theta^{T-1}; admissibility is per site along time.
struct space_time_word {
    std::size_t L = 0;
    std::vector<symbol_frame> frames;

    std::size_t T() const { return frames.size(); }
};

bool word_admissible(const transition_matrix& m, const space_time_word& word);

// Result of one lattice step.  Escape is a value, not an error: `escaped`
// reports the smallest site index whose coordinate left the hold set.
struct step_result {
    bool escaped = false;
    std::size_t site = 0;
    lattice_state state;
};

// One step of the coupled map, sitewise branch application followed by the
// circular convolution.
step_result step(const local_map& map, const kernel& k, const lattice_state& x);

// Sitewise symbolic location; nullopt when any site is in a gap.
std::optional<symbol_frame> locate(const local_map& map, const lattice_state& x);

// Sharp weak-coupling criterion for the affine Lorenz family under the
// diffusive kernel: a(1 - 2 eps) > 2, strict.
bool weak_coupling_ok_affine(double a, double eps);

struct threshold_report {
    bool affine_ok = false;     // inf|f'| * (2 c_0 - 1) > 2
    double general_bound = 0.0; // min(2 gamma / M, delta / (delta + M/2))
    double norm = 0.0;          // |Id - C| = 2 (1 - c_0)
    bool verdict = false;       // norm strictly below general_bound
};

// Sufficient weak-coupling bound from the certified map margins.  The bound
// compares the coupling norm against min(2 gamma / M, delta / (delta + r));
// r = M/2 is the radius of the ball containing the image of the hold set,
// matching the per-site displacement estimate |x_s - (Cx)_s| <= norm * M / 2.
threshold_report weak_coupling_ok_general(const map_constants& consts, const kernel& k);

// Iterates the lattice map up to T steps, recording the symbol frame at each
// time.  On survival the word carries T + 1 frames (times 0..T); on escape at
// time t it carries the t frames seen before.
struct orbit_summary {
    bool survived = false;
    std::size_t escape_time = 0;
    space_time_word word;
};

orbit_summary survival_orbit(const local_map& map, const kernel& k,
                             const lattice_state& x, std::size_t T);

// Backward-contraction solver for cylinder points.  Pulling one step back
// means applying the inverse coupling and then the sitewise branch inverses
// named by the frame; a full sweep pulls back through all T frames and the
// iteration of sweeps contracts with factor alpha^T, alpha = |C^-1| / inf|f'|.
// The limit is the T-periodic state realizing the word, the canonical
// representative of the word's cylinder.  Words whose wrap-around pair is
// inadmissible are closed up with the shortest admissible connector frames
// before iterating, so the representative still realizes the word itself.
class backward_engine {
public:
    backward_engine(const local_map& map, const kernel& k, std::size_t L,
                    double tol = 1e-12);

    double alpha() const { return alpha_; }
    std::size_t lattice_size() const { return L_; }

    lattice_state point(const space_time_word& word) const;

    // The representative point together with its forward orbit states
    // x, Fx, ..., F^{T-1}x taken from the converged sweep.
    struct orbit {
        lattice_state x0;
        std::vector<lattice_state> states;
    };
    orbit point_with_orbit(const space_time_word& word) const;

private:
    void pull_back(const symbol_frame& frame, lattice_state& z) const;
    std::vector<symbol_frame> closing_frames(const space_time_word& word) const;

    const local_map* map_;
    std::size_t L_ = 0;
    double tol_ = 0.0;
    double alpha_ = 0.0;
    inverse_kernel inv_;
    static constexpr std::size_t sweep_cap = 10000;
};

// Convenience wrapper constructing a throwaway engine.
lattice_state cylinder_point(const local_map& map, const kernel& k,
                             const space_time_word& word, double tol = 1e-12);

} // namespace cml
