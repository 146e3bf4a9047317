#pragma once

#include <queue>
#include <string>
#include <vector>

#include <json.hpp>

#include "pse/core/errors.hpp"
#include "pse/data/records.hpp"

namespace pse {

struct GrammarState {
  std::string name;
  TmRegionKind kind = TmRegionKind::Globular;
  bool start = false;
  bool end = false;
};

// Topology state machine for the tagger. Forbidden transitions stay at -inf
// whatever the learned scores do; minimum membrane-helix duration is
// enforced by chained states.
struct StateGrammar {
  std::vector<GrammarState> states;
  std::vector<std::vector<bool>> allowed;  // allowed[from][to]

  std::size_t size() const { return states.size(); }

  int find(const std::string& name) const {
    for (std::size_t k = 0; k < states.size(); ++k)
      if (states[k].name == name) return static_cast<int>(k);
    return -1;
  }

  void validate() const {
    const std::size_t n = states.size();
    if (n == 0) throw ConfigError("grammar: no states");
    if (allowed.size() != n)
      throw ConfigError("grammar: transition matrix not square");
    for (const auto& row : allowed)
      if (row.size() != n)
        throw ConfigError("grammar: transition matrix not square");
    bool any_start = false, any_end = false;
    for (const auto& s : states) {
      any_start = any_start || s.start;
      any_end = any_end || s.end;
    }
    if (!any_start || !any_end)
      throw ConfigError("grammar: needs at least one start and one end state");
    // every state reachable from some start state
    std::vector<bool> reach(n, false);
    std::queue<std::size_t> q;
    for (std::size_t k = 0; k < n; ++k)
      if (states[k].start) {
        reach[k] = true;
        q.push(k);
      }
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v = 0; v < n; ++v)
        if (allowed[u][v] && !reach[v]) {
          reach[v] = true;
          q.push(v);
        }
    }
    for (std::size_t k = 0; k < n; ++k)
      if (!reach[k])
        throw ConfigError("grammar: state '" + states[k].name +
                          "' unreachable from start states");
    // an end state reachable from every state
    std::vector<bool> coreach(n, false);
    for (std::size_t k = 0; k < n; ++k)
      if (states[k].end) {
        coreach[k] = true;
        q.push(k);
      }
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v = 0; v < n; ++v)
        if (allowed[v][u] && !coreach[v]) {
          coreach[v] = true;
          q.push(v);
        }
    }
    for (std::size_t k = 0; k < n; ++k)
      if (!coreach[k])
        throw ConfigError("grammar: no end state reachable from '" +
                          states[k].name + "'");
  }

  // Default topology: a leading signal-peptide state, inside/outside loops,
  // two directed membrane-helix chains of `tm_chain` states (minimum
  // duration), and a globular state for proteins that never enter the
  // membrane.
  static StateGrammar topology_default(std::size_t tm_chain = 5) {
    if (tm_chain < 1) throw ConfigError("grammar: tm_chain must be >= 1");
    StateGrammar g;
    auto add = [&](const std::string& name, TmRegionKind kind, bool start,
                   bool end) {
      g.states.push_back({name, kind, start, end});
      return static_cast<int>(g.states.size() - 1);
    };
    const int sp = add("sp", TmRegionKind::SignalPeptide, true, false);
    const int inside = add("in", TmRegionKind::Inside, true, true);
    const int outside = add("out", TmRegionKind::Outside, true, true);
    const int glob = add("glob", TmRegionKind::Globular, true, true);
    std::vector<int> io(tm_chain), oi(tm_chain);
    for (std::size_t k = 0; k < tm_chain; ++k)
      io[k] = add("tm_io" + std::to_string(k + 1), TmRegionKind::TmHelix,
                  false, false);
    for (std::size_t k = 0; k < tm_chain; ++k)
      oi[k] = add("tm_oi" + std::to_string(k + 1), TmRegionKind::TmHelix,
                  false, false);
    const std::size_t n = g.states.size();
    g.allowed.assign(n, std::vector<bool>(n, false));
    auto arc = [&](int a, int b) {
      g.allowed[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
          true;
    };
    arc(sp, sp);
    arc(sp, outside);  // cleaved signal peptide leaves the N-terminus outside
    arc(sp, glob);
    arc(inside, inside);
    arc(outside, outside);
    arc(glob, glob);
    arc(inside, io[0]);
    arc(oi[tm_chain - 1], inside);
    arc(outside, oi[0]);
    arc(io[tm_chain - 1], outside);
    for (std::size_t k = 0; k + 1 < tm_chain; ++k) {
      arc(io[k], io[k + 1]);
      arc(oi[k], oi[k + 1]);
    }
    arc(io[tm_chain - 1], io[tm_chain - 1]);  // helices may exceed the minimum
    arc(oi[tm_chain - 1], oi[tm_chain - 1]);
    g.validate();
    return g;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["states"] = nlohmann::json::array();
    for (const auto& s : states) {
      j["states"].push_back({{"name", s.name},
                             {"region", std::string(1, tm_region_letter(s.kind))},
                             {"start", s.start},
                             {"end", s.end}});
    }
    j["transitions"] = nlohmann::json::array();
    for (std::size_t a = 0; a < size(); ++a)
      for (std::size_t b = 0; b < size(); ++b)
        if (allowed[a][b])
          j["transitions"].push_back({states[a].name, states[b].name});
    return j;
  }

  static StateGrammar from_json(const nlohmann::json& j) {
    StateGrammar g;
    for (const auto& s : j.at("states")) {
      GrammarState st;
      st.name = s.at("name").get<std::string>();
      const std::string region = s.at("region").get<std::string>();
      if (region.size() != 1)
        throw ConfigError("grammar: region must be one letter");
      st.kind = tm_region_from_letter(region[0], "grammar");
      st.start = s.at("start").get<bool>();
      st.end = s.at("end").get<bool>();
      g.states.push_back(st);
    }
    g.allowed.assign(g.size(), std::vector<bool>(g.size(), false));
    for (const auto& t : j.at("transitions")) {
      const int a = g.find(t.at(0).get<std::string>());
      const int b = g.find(t.at(1).get<std::string>());
      if (a < 0 || b < 0)
        throw ConfigError("grammar: transition references unknown state");
      g.allowed[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
          true;
    }
    g.validate();
    return g;
  }
};

// Collapse a state path into maximal regions; helix chains of either
// direction merge into TmHelix runs.
inline std::vector<TmRegion> states_to_regions(const std::vector<int>& path,
                                               const StateGrammar& grammar) {
  std::vector<TmRegion> regions;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const TmRegionKind kind =
        grammar.states[static_cast<std::size_t>(path[i])].kind;
    if (!regions.empty() && regions.back().kind == kind)
      regions.back().end = i + 1;
    else
      regions.push_back({kind, i, i + 1});
  }
  return regions;
}

}  // namespace pse
