#pragma once
#include <array>
#include <string>
#include <vector>

namespace mtdc {

constexpr int kTerminalStates = 18;
constexpr int kTerminalInputs = 3;

enum TerminalState : int {
  X1, X2, X3, X4,
  GAMMA_P, GAMMA_Q, GAMMA_LD, GAMMA_LQ,
  THETA, OMEGA,
  I_LD, I_LQ, V_OD, V_OQ, I_OD, I_OQ,
  V_DC, X5
};

enum TerminalInput : int { P_REF, V_DC_REF, Q_REF };

inline constexpr std::array<const char*, kTerminalStates> kTerminalStateNames = {
    "x1",    "x2",    "x3",   "x4",   "gamma_P", "gamma_Q", "gamma_ld", "gamma_lq", "theta_pll",
    "omega", "i_ld",  "i_lq", "v_od", "v_oq",    "i_od",    "i_oq",     "v_dc",     "x5"};

inline constexpr std::array<const char*, kTerminalInputs> kTerminalInputNames = {"p_ref", "v_dc_ref", "q_ref"};

inline bool is_controller_state(int s) { return s >= GAMMA_P && s <= OMEGA; }

// Terminal blocks of 18 states in declared order, then one current per cable.
class StateIndex {
public:
  StateIndex() = default;
  StateIndex(std::vector<std::string> terminal_ids, std::vector<std::string> cable_ids)
      : terminals_(std::move(terminal_ids)), cables_(std::move(cable_ids)) {}

  int size() const { return kTerminalStates * n_terminals() + n_cables(); }
  int n_terminals() const { return static_cast<int>(terminals_.size()); }
  int n_cables() const { return static_cast<int>(cables_.size()); }
  int terminal_state(int n, int s) const { return kTerminalStates * n + s; }
  int cable_state(int k) const { return kTerminalStates * n_terminals() + k; }

  // Terminal index owning state i, or n_terminals() for cable currents (the "DC" group).
  int group_of(int i) const { return i < kTerminalStates * n_terminals() ? i / kTerminalStates : n_terminals(); }
  int local_state(int i) const { return i < kTerminalStates * n_terminals() ? i % kTerminalStates : -1; }

  std::string label(int i) const {
    if (i < kTerminalStates * n_terminals())
      return terminals_[i / kTerminalStates] + "." + kTerminalStateNames[i % kTerminalStates];
    return "dc." + cables_[i - kTerminalStates * n_terminals()] + ".i_dc";
  }

  int find(const std::string& label_text) const {
    for (int i = 0; i < size(); ++i)
      if (label(i) == label_text) return i;
    return -1;
  }

  const std::vector<std::string>& terminal_ids() const { return terminals_; }
  const std::vector<std::string>& cable_ids() const { return cables_; }
  std::vector<std::string> group_names() const {
    auto g = terminals_;
    g.push_back("DC");
    return g;
  }

private:
  std::vector<std::string> terminals_;
  std::vector<std::string> cables_;
};

} // namespace mtdc
