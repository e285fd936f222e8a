#pragma once

// JSON scenarios: a frame, a basis, a state, regions and the list of checks to run on them.
// Reports are assembled in scenario order and carry no timings, so a fixed scenario and seed
// always serialize to the same bytes.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rhobound/bounds.hpp"
#include "rhobound/densities.hpp"
#include "rhobound/frame.hpp"
#include "rhobound/geometry.hpp"
#include "rhobound/hamiltonian.hpp"
#include "rhobound/orbitals.hpp"
#include "rhobound/parallel.hpp"
#include "rhobound/random.hpp"
#include "rhobound/spectral.hpp"
#include "rhobound/wavefunctions.hpp"

namespace rhobound::scenario {

using Json = nlohmann::ordered_json;

/// Malformed or inconsistent scenario file.
class ParseError : public Error {
 public:
  using Error::Error;
};

inline const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{"lemma21", "lemma22-audit", "lemma31", "occupancy", "theorem",
                                              "energy-chain", "forces", "spectrum", "dilation"};
  return names;
}

struct CheckSpec {
  std::string name;
  Json params = Json::object();

  int trials() const { return params.value("trials", 0); }
};

struct StateSpec {
  enum class Kind { none, terms, random };
  Kind kind{Kind::none};
  std::vector<std::pair<double, std::vector<int>>> terms;
  std::uint64_t seed{0};
  int electrons{0};
  int dets{0};
};

struct Scenario {
  std::string name;
  std::optional<std::uint64_t> seed;
  std::optional<NuclearFrame> frame;
  std::vector<EvenTemperedSpec> basis;
  std::string orbital_set{"lowdin"};
  StateSpec state;
  std::vector<Region> regions;
  std::vector<CheckSpec> checks;
  double overlap_tol{1e-10};
  QuadratureOptions quadrature{};
  Json sweep = Json::object();
};

// ---------------------------------------------------------------------------
// parsing

namespace detail {

inline Vec3 vec3(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ParseError(std::string(what) + " must be a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline Ball ball(const Json& j) {
  return Ball{vec3(j.at("center"), "ball center"), j.at("radius").get<double>()};
}

inline Region region(const Json& j) {
  if (!j.is_object() || j.size() != 1) throw ParseError("region must be an object with one of ball, box, union");
  if (j.contains("ball")) return Region(ball(j["ball"]));
  if (j.contains("box")) return Region(Box{vec3(j["box"].at("lo"), "box lo"), vec3(j["box"].at("hi"), "box hi")});
  if (j.contains("union")) {
    BallUnion u;
    for (const auto& b : j["union"]) u.balls.push_back(ball(b));
    return Region(std::move(u));
  }
  throw ParseError("unknown region kind '" + j.begin().key() + "'");
}

inline NuclearFrame frame(const Json& j) {
  std::vector<Nucleus> nuclei;
  for (const auto& n : j.at("nuclei")) nuclei.push_back({vec3(n.at("position"), "nucleus position"), n.at("charge").get<int>()});
  std::optional<double> a;
  if (j.contains("a")) a = j["a"].get<double>();
  return NuclearFrame(std::move(nuclei), a);
}

/// "random:seed=<u64>,N=<int>,dets=<int>" with every key optional except N.
inline StateSpec random_state(std::string_view text, const std::optional<std::uint64_t>& default_seed) {
  StateSpec s;
  s.kind = StateSpec::Kind::random;
  bool have_seed = false, have_n = false;
  std::string body(text);
  if (!body.empty() && body.front() == '{' && body.back() == '}') body = body.substr(1, body.size() - 2);
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParseError("random state: expected key=value, got '" + item + "'");
    const std::string key = std::string(rhobound::detail::trim(item.substr(0, eq)));
    const std::string value = std::string(rhobound::detail::trim(item.substr(eq + 1)));
    try {
      if (key == "seed") {
        s.seed = std::stoull(value);
        have_seed = true;
      } else if (key == "N") {
        s.electrons = std::stoi(value);
        have_n = true;
      } else if (key == "dets") {
        s.dets = std::stoi(value);
      } else {
        throw ParseError("random state: unknown key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      throw ParseError("random state: bad value for '" + key + "'");
    }
  }
  if (!have_n) throw ParseError("random state needs N");
  if (!have_seed) {
    if (!default_seed) throw ParseError("random state needs a seed (state or scenario level)");
    s.seed = *default_seed;
  }
  return s;
}

inline StateSpec state(const Json& j, const std::optional<std::uint64_t>& default_seed) {
  if (j.is_string()) {
    const auto text = j.get<std::string>();
    if (text.rfind("random:", 0) != 0) throw ParseError("state string must start with 'random:'");
    return random_state(std::string_view(text).substr(7), default_seed);
  }
  if (j.contains("random")) {
    const auto& r = j["random"];
    std::string text = "N=" + std::to_string(r.at("N").get<int>());
    if (r.contains("seed")) text += ",seed=" + std::to_string(r["seed"].get<std::uint64_t>());
    if (r.contains("dets")) text += ",dets=" + std::to_string(r["dets"].get<int>());
    return random_state(text, default_seed);
  }
  StateSpec s;
  s.kind = StateSpec::Kind::terms;
  for (const auto& t : j.at("determinants")) s.terms.emplace_back(t.value("coeff", 1.0), t.at("orbitals").get<std::vector<int>>());
  if (s.terms.empty()) throw ParseError("state needs at least one determinant");
  return s;
}

}  // namespace detail

inline Scenario parse(const Json& j) {
  try {
    if (!j.is_object()) throw ParseError("scenario must be a JSON object");
    Scenario sc;
    sc.name = j.value("name", std::string("scenario"));
    if (j.contains("seed")) sc.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("frame")) sc.frame = detail::frame(j["frame"]);
    if (j.contains("basis")) {
      const auto& b = j["basis"];
      if (b.is_string()) {
        sc.basis.push_back(parse_basis_spec(b.get<std::string>()));
      } else {
        for (const auto& s : b) sc.basis.push_back(parse_basis_spec(s.get<std::string>()));
      }
    }
    sc.orbital_set = j.value("orbital_set", std::string("lowdin"));
    if (sc.orbital_set != "lowdin" && sc.orbital_set != "eigen") throw ParseError("orbital_set must be 'lowdin' or 'eigen'");
    if (sc.orbital_set == "eigen" && !sc.frame) throw ParseError("orbital_set 'eigen' needs a frame");
    if (j.contains("state")) sc.state = detail::state(j["state"], sc.seed);
    if (sc.state.kind != StateSpec::Kind::none && sc.basis.empty()) throw ParseError("a state needs a basis");
    if (j.contains("regions"))
      for (const auto& r : j["regions"]) sc.regions.push_back(detail::region(r));
    if (j.contains("tolerances")) {
      const auto& t = j["tolerances"];
      sc.overlap_tol = t.value("overlap", sc.overlap_tol);
      sc.quadrature.node_cap = t.value("node_cap", sc.quadrature.node_cap);
    }
    if (j.contains("sweep")) sc.sweep = j["sweep"];
    for (const auto& c : j.at("checks")) {
      CheckSpec spec;
      if (c.is_string()) {
        spec.name = c.get<std::string>();
      } else {
        spec.name = c.at("name").get<std::string>();
        spec.params = c;
        spec.params.erase("name");
      }
      if (std::find(check_names().begin(), check_names().end(), spec.name) == check_names().end())
        throw ParseError("unknown check '" + spec.name + "'");
      if (spec.trials() > 0 && !sc.seed) throw ParseError("check '" + spec.name + "' draws random trials and needs a scenario seed");
      sc.checks.push_back(std::move(spec));
    }
    return sc;
  } catch (const ParseError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
}

inline Scenario load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed JSON in '" + path + "': " + e.what());
  }
  return parse(j);
}

// ---------------------------------------------------------------------------
// resolved instance

struct Workspace {
  std::optional<OrbitalSet> raw_basis;
  std::shared_ptr<const OrbitalSet> orbitals;
  std::optional<CIState> state;
};

inline Workspace resolve(const Scenario& sc) {
  Workspace w;
  if (!sc.basis.empty()) {
    std::vector<Orbital> fns;
    for (const auto& spec : sc.basis) {
      const auto part = even_tempered(spec);
      fns.insert(fns.end(), part.begin(), part.end());
    }
    w.raw_basis.emplace(fns);
    if (sc.orbital_set == "eigen") {
      w.orbitals = std::make_shared<const OrbitalSet>(eigenorbitals(*sc.frame, *w.raw_basis, w.raw_basis->size()));
    } else {
      w.orbitals = std::make_shared<const OrbitalSet>(orthonormalize(*w.raw_basis));
    }
  }
  try {
    if (sc.state.kind == StateSpec::Kind::terms) {
      std::vector<CITerm> terms;
      for (const auto& [c, idx] : sc.state.terms) {
        int sign = 1;
        auto det = Determinant::from_unsorted(idx, sign);
        terms.push_back({sign * c, std::move(det)});
      }
      w.state = normalize(CIState(w.orbitals, std::move(terms)));
    } else if (sc.state.kind == StateSpec::Kind::random) {
      auto rng = trial_engine(sc.state.seed, "state", 0);
      w.state = random_ci_state(rng, w.orbitals, sc.state.electrons, sc.state.dets);
    }
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("state: ") + e.what());
  }
  return w;
}

// ---------------------------------------------------------------------------
// records

inline Json record(const BoundReport& r) {
  Json j;
  j["check"] = r.check;
  j["applicable"] = r.applicable;
  j["satisfied"] = r.satisfied;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["margin"] = r.margin;
  j["tolerance"] = r.tolerance;
  j["context"] = r.context;
  return j;
}

/// One record summarizing many instances of the same check: the instance with the smallest
/// margin is reported as lhs/rhs.
inline Json aggregate(const std::string& check, const std::vector<BoundReport>& reps) {
  int applicable = 0, violations = 0;
  const BoundReport* worst = nullptr;
  for (const auto& r : reps) {
    if (!r.applicable) continue;
    ++applicable;
    if (!r.satisfied) ++violations;
    if (!worst || r.margin < worst->margin) worst = &r;
  }
  Json j;
  j["check"] = check;
  j["applicable"] = applicable > 0;
  j["satisfied"] = violations == 0;
  j["instances"] = reps.size();
  j["violations"] = violations;
  j["not_applicable"] = static_cast<int>(reps.size()) - applicable;
  j["lhs"] = worst ? worst->lhs : 0.0;
  j["rhs"] = worst ? worst->rhs : 0.0;
  j["margin"] = worst ? worst->margin : 0.0;
  j["context"] = worst ? worst->context : std::string("no applicable instance");
  return j;
}

inline Json vec_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

inline std::string region_label(std::size_t index, const Region& r) { return "region " + std::to_string(index) + " (" + r.kind() + ")"; }

// ---------------------------------------------------------------------------
// checks

struct Context {
  const Scenario& sc;
  const Workspace& ws;
  std::size_t check_index;
  const CheckSpec& spec;

  std::mt19937_64 engine(std::size_t trial) const {
    return trial_engine(*sc.seed, spec.name + "#" + std::to_string(check_index), trial);
  }
  const NuclearFrame& frame() const {
    if (!sc.frame) throw ParseError("check '" + spec.name + "' needs a frame");
    return *sc.frame;
  }
  const OrbitalSet& raw_basis() const {
    if (!ws.raw_basis) throw ParseError("check '" + spec.name + "' needs a basis");
    return *ws.raw_basis;
  }
  const CIState& state() const {
    if (!ws.state) throw ParseError("check '" + spec.name + "' needs a state");
    return *ws.state;
  }
  const std::vector<Region>& regions() const {
    if (sc.regions.empty()) throw ParseError("check '" + spec.name + "' needs at least one region");
    return sc.regions;
  }
  template <class T>
  T param(const char* key, T fallback) const {
    return spec.params.contains(key) ? spec.params[key].get<T>() : fallback;
  }
};

using Records = std::vector<Json>;

template <class Fn>
std::vector<BoundReport> flatten(std::size_t trials, Fn&& fn) {
  std::vector<BoundReport> out;
  for (auto& part : parallel_map(trials, std::forward<Fn>(fn)))
    for (auto& r : part) out.push_back(std::move(r));
  return out;
}

inline std::vector<BoundReport> select(const std::vector<BoundReport>& reps, const std::string& check) {
  std::vector<BoundReport> out;
  for (const auto& r : reps)
    if (r.check == check) out.push_back(r);
  return out;
}

inline Records check_spectrum(const Context& cx) {
  const auto est = rayleigh_ritz(cx.frame(), cx.raw_basis());
  BoundReport r = make_report("spectrum", est.ground_estimate, est.ground_estimate, 0.0, est.basis_descriptor);
  Json extra;
  if (cx.spec.params.contains("expect")) {
    const auto lim = cx.param<std::vector<double>>("expect", {});
    if (lim.size() != 2) throw ParseError("spectrum expect must be [lo, hi]");
    r.rhs = lim[1];
    r.margin = std::min(lim[1] - est.ground_estimate, est.ground_estimate - lim[0]);
    r.satisfied = est.ground_estimate > lim[0] && est.ground_estimate <= lim[1];
    extra["expect"] = lim;
  }
  Json rec = record(r);
  rec["estimate"] = est.ground_estimate;
  rec["basis"] = est.basis_descriptor;
  for (auto& [k, v] : extra.items()) rec[k] = v;
  Records out{rec};
  if (cx.spec.params.contains("ladder")) {
    if (cx.sc.basis.size() != 1) throw ParseError("spectrum ladder needs a single basis spec");
    std::vector<BoundReport> mono;
    Json rungs = Json::array();
    std::optional<double> prev;
    for (int n : cx.param<std::vector<int>>("ladder", {})) {
      auto spec = cx.sc.basis.front();
      spec.n = n;
      const double e = rayleigh_ritz(cx.frame(), OrbitalSet(even_tempered(spec))).ground_estimate;
      rungs.push_back(Json{{"n", n}, {"estimate", e}});
      if (prev) mono.push_back(make_report("spectrum:monotone", e, *prev, 1e-12, "n=" + std::to_string(n)));
      prev = e;
    }
    Json agg = aggregate("spectrum:monotone", mono);
    agg["rungs"] = rungs;
    out.push_back(agg);
  }
  return out;
}

inline Records check_lemma22(const Context& cx) {
  LadderOptions ladder;
  ladder.sizes = cx.param<std::vector<int>>("sizes", ladder.sizes);
  ladder.beta = cx.param("beta", ladder.beta);
  const int trials = cx.spec.trials();
  std::vector<BoundReport> reps;
  if (trials == 0) {
    ladder.alpha0 = cx.param("alpha0", cx.frame().size() == 1 ? 1e-3 : 0.1);
    reps = lower_bound_audit(cx.frame(), even_tempered_ladder(cx.frame(), ladder)).checks;
  } else {
    const auto sizes = cx.param<std::vector<int>>("nuclei", {1, 2, 4, 8});
    const double a = cx.param("a", 1.0);
    const int zmax = cx.param("max_charge", 2);
    reps = flatten(trials, [&](std::size_t t) {
      auto rng = cx.engine(t);
      const int l = sizes[t % sizes.size()];
      const auto frame = random_frame(rng, l, a, zmax, 0.75 * a * std::cbrt(double(l)) + a);
      LadderOptions opts = ladder;
      opts.alpha0 = cx.param("alpha0", l == 1 ? 1e-3 : 0.1);
      return lower_bound_audit(frame, even_tempered_ladder(frame, opts)).checks;
    });
  }
  return {aggregate("lemma22-audit", select(reps, "lemma22-audit")), aggregate("lemma22-audit:monotone", select(reps, "lemma22-audit:monotone"))};
}

/// Random unnormalized combination of 1-3 primitives placed near the nuclei.
inline Orbital random_test_function(std::mt19937_64& rng, const NuclearFrame& frame) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Orbital f;
  const int terms = 1 + static_cast<int>(rng() % 3);
  for (int k = 0; k < terms; ++k) {
    const auto& n = frame.nuclei()[rng() % frame.nuclei().size()];
    const double alpha = std::exp(uniform(rng, std::log(0.05), std::log(20.0)));
    f.terms.push_back({normal(rng), GaussianPrimitive{n.position + uniform_point(rng, 0.5), alpha}});
  }
  return f;
}

inline Records check_lemma21(const Context& cx) {
  const int trials = cx.spec.trials();
  std::vector<BoundReport> reps;
  if (trials == 0) {
    const double b = cx.param("b", cx.frame().separation_floor().value_or(0.0));
    for (const auto& f : cx.raw_basis().orbitals()) reps.push_back(lemma21_sides(f, cx.frame(), b));
  } else {
    const auto sizes = cx.param<std::vector<int>>("nuclei", {1, 2, 4, 8});
    reps = flatten(trials, [&](std::size_t t) {
      auto rng = cx.engine(t);
      const int l = sizes[t % sizes.size()];
      const double b = uniform(rng, 0.3, 1.5);
      const auto frame = random_frame(rng, l, b, 1, 0.75 * b * std::cbrt(double(l)) + b);
      return std::vector<BoundReport>{lemma21_sides(random_test_function(rng, frame), frame, b)};
    });
  }
  return {aggregate("lemma21", reps)};
}

inline Records check_lemma31(const Context& cx) {
  const int trials = cx.spec.trials();
  std::vector<BoundReport> reps;
  if (trials == 0) {
    for (std::size_t i = 0; i < cx.regions().size(); ++i) {
      auto r = lemma31_check(cx.state(), cx.regions()[i], cx.sc.overlap_tol, cx.sc.quadrature);
      r.context += "; " + region_label(i, cx.regions()[i]);
      reps.push_back(r);
    }
    Records out;
    for (const auto& r : reps) out.push_back(record(r));
    return out;
  }
  const auto electrons = cx.param<std::vector<int>>("electrons", {2, 3, 4});
  const int max_orbitals = cx.param("max_orbitals", 6);
  const int dets = cx.param("dets", 0);
  reps = flatten(trials, [&](std::size_t t) {
    auto rng = cx.engine(t);
    const int n = electrons[t % electrons.size()];
    const int orbitals = n + static_cast<int>(rng() % static_cast<std::uint64_t>(std::max(1, max_orbitals - n + 1)));
    const auto set = random_orbital_set(rng, orbitals);
    const auto state = random_ci_state(rng, set, n, dets);
    const auto region = random_region(rng);
    const auto overlap = region_overlap(*set, region, cx.sc.overlap_tol, cx.sc.quadrature);
    std::vector<BoundReport> out{lemma31_check(state, overlap)};
    // closed form against Slater-Condon on one determinant of the same set
    auto all = all_determinants(orbitals, n);
    const auto& det = all[rng() % all.size()];
    const auto closed = determinant_functionals(overlap, det);
    const auto sc = functionals(CIState(set, {CITerm{1.0, det}}), overlap);
    const double diff = std::max(std::abs(closed.P - sc.P), std::abs(*closed.Q - *sc.Q));
    out.push_back(make_report("lemma31:determinant-path", diff, 1e-10, 0.0, "N=" + std::to_string(n)));
    return out;
  });
  return {aggregate("lemma31", select(reps, "lemma31")), aggregate("lemma31:determinant-path", select(reps, "lemma31:determinant-path"))};
}

inline std::vector<BoundReport> occupancy_instance(const CIState& state, const Region& region, const Context& cx, const std::string& label) {
  std::vector<BoundReport> out;
  const auto overlap = region_overlap(state.orbitals(), region, cx.sc.overlap_tol, cx.sc.quadrature);
  const auto f = functionals(state, overlap);
  const auto occ = occupancy(state, overlap);
  const int n = state.electrons();
  out.push_back(make_report("occupancy:normalization", std::abs(occ.total() - 1.0), 1e-10, 0.0, label));
  out.push_back(make_report("occupancy:mean", std::abs(occ.mean() - f.rho_integral), 1e-8, 0.0, label));
  if (state.is_single_determinant()) {
    const auto pb = occupancy_determinant(overlap, state.terms().front().determinant);
    out.push_back(make_report("occupancy:determinant", occ.distance(pb), 1e-10, 0.0, label));
  }
  if (cx.param("bruteforce", n <= 3)) {
    BruteForceOptions bo;
    bo.tol = cx.param("bruteforce_tol", 1e-8);
    bo.quadrature = cx.sc.quadrature;
    const auto bf = bruteforce(state, region, bo);
    out.push_back(make_report("occupancy:P", std::abs(bf.functionals.P - f.P), 1e-6, 0.0, label));
    if (n >= 2) out.push_back(make_report("occupancy:Q", std::abs(*bf.functionals.Q - *f.Q), 1e-6, 0.0, label));
    out.push_back(make_report("occupancy:distribution", occ.distance(bf.occupancy), 1e-6, 0.0, label));
    out.push_back(make_report("occupancy:bruteforce-mean", std::abs(bf.occupancy.mean() - f.rho_integral), 1e-7, 0.0, label));
  }
  return out;
}

inline Records check_occupancy(const Context& cx) {
  const int trials = cx.spec.trials();
  std::vector<BoundReport> reps;
  if (trials == 0) {
    for (std::size_t i = 0; i < cx.regions().size(); ++i) {
      auto part = occupancy_instance(cx.state(), cx.regions()[i], cx, region_label(i, cx.regions()[i]));
      reps.insert(reps.end(), part.begin(), part.end());
    }
  } else {
    const int n = cx.param("electrons", 2);
    const int max_orbitals = cx.param("max_orbitals", 3);
    reps = flatten(trials, [&](std::size_t t) {
      auto rng = cx.engine(t);
      const int orbitals = n + static_cast<int>(rng() % static_cast<std::uint64_t>(std::max(1, max_orbitals - n + 1)));
      const auto set = random_orbital_set(rng, orbitals);
      const auto state = random_ci_state(rng, set, n);
      return occupancy_instance(state, random_region(rng), cx, "trial " + std::to_string(t));
    });
  }
  Records out;
  for (const char* name : {"occupancy:normalization", "occupancy:mean", "occupancy:determinant", "occupancy:P", "occupancy:Q",
                           "occupancy:distribution", "occupancy:bruteforce-mean"}) {
    const auto part = select(reps, name);
    if (!part.empty()) out.push_back(aggregate(name, part));
  }
  return out;
}

inline Records check_theorem(const Context& cx) {
  Records out;
  for (std::size_t i = 0; i < cx.regions().size(); ++i) {
    auto r = theorem_certificate(cx.state(), cx.frame(), cx.regions()[i], cx.sc.overlap_tol, cx.sc.quadrature);
    r.context += (r.context.empty() ? "" : "; ") + region_label(i, cx.regions()[i]);
    out.push_back(record(r));
  }
  return out;
}

inline Records check_energy_chain(const Context& cx) {
  ChainOptions opts;
  opts.overlap_tol = cx.sc.overlap_tol;
  opts.repulsion.inner_polar = cx.param("inner_polar", opts.repulsion.inner_polar);
  opts.repulsion.inner_radial = cx.param("inner_radial", opts.repulsion.inner_radial);
  opts.repulsion.quadrature = cx.sc.quadrature;
  const auto chains = parallel_map(cx.regions().size(), [&](std::size_t i) { return energy_chain_check(cx.state(), cx.frame(), cx.regions()[i], opts); });
  Records out;
  for (std::size_t i = 0; i < chains.size(); ++i) {
    if (!chains[i].applicable) {
      out.push_back(record(not_applicable("energy-chain", chains[i].context)));
      continue;
    }
    for (auto link : chains[i].links) {
      link.context = region_label(i, cx.regions()[i]) + "; " + chains[i].context;
      out.push_back(record(link));
    }
  }
  return out;
}

inline BoundReport force_fd_report(const CIState& state, const NuclearFrame& frame, const std::string& label) {
  const auto f = hf_force(state, frame);
  const auto fd = hf_force_finite_difference(state, frame);
  double diff = 0.0;
  for (std::size_t l = 0; l < fd.size(); ++l) diff = std::max(diff, (f.electronic[l] - fd[l]).cwiseAbs().maxCoeff());
  return make_report("forces:finite-difference", diff, 1e-6, 0.0, label);
}

inline Records check_forces(const Context& cx) {
  const int trials = cx.spec.trials();
  if (trials > 0) {
    const auto reps = flatten(trials, [&](std::size_t t) {
      auto rng = cx.engine(t);
      const int l = 1 + static_cast<int>(t % 3);
      const auto frame = random_frame(rng, l, 0.8, 2, 1.2);
      RandomBasisOptions bopts;
      bopts.center_half_width = 1.5;
      const auto set = random_orbital_set(rng, 3, bopts);
      const auto state = random_ci_state(rng, set, 2);
      return std::vector<BoundReport>{force_fd_report(state, frame, "trial " + std::to_string(t))};
    });
    return {aggregate("forces:finite-difference", reps)};
  }
  const auto& frame = cx.frame();
  const auto f = hf_force(cx.state(), frame);
  Json rec;
  rec["check"] = "forces";
  rec["applicable"] = true;
  rec["satisfied"] = true;
  rec["equilibrium_residual"] = f.equilibrium_residual;
  Json per = Json::array();
  for (std::size_t l = 0; l < f.total.size(); ++l)
    per.push_back(Json{{"electronic", vec_json(f.electronic[l])}, {"nuclear", vec_json(f.nuclear[l])}, {"total", vec_json(f.total[l])}});
  rec["nuclei"] = per;
  Records out{rec, record(force_fd_report(cx.state(), frame, "scenario state"))};
  if (cx.param("mirror", false)) {
    if (frame.size() != 2) throw ParseError("forces mirror check needs exactly two nuclei");
    const double el = (f.electronic[0] + f.electronic[1]).norm();
    const double tot = (f.total[0] + f.total[1]).norm();
    out.push_back(record(make_report("forces:antisymmetry", std::max(el, tot), 1e-8, 0.0, "|F_0 + F_1|")));
  }
  return out;
}

inline Records check_dilation(const Context& cx) {
  const int trials = cx.spec.trials();
  std::vector<BoundReport> reps;
  if (trials == 0) {
    for (double s : cx.param<std::vector<double>>("s", {1.0, 2.0})) reps.push_back(dilation_check(cx.frame(), cx.raw_basis(), s));
  } else {
    reps = flatten(trials, [&](std::size_t t) {
      auto rng = cx.engine(t);
      const int l = 1 + static_cast<int>(t % 4);
      const auto frame = random_frame(rng, l, 0.5, 3, 1.5);
      std::vector<Orbital> fns;
      for (int k = 0; k < 4; ++k)
        fns.push_back(normalized_primitive(uniform_point(rng, 1.5), std::exp(uniform(rng, std::log(0.1), std::log(10.0)))));
      return std::vector<BoundReport>{dilation_check(frame, OrbitalSet(fns), uniform(rng, 0.5, 3.0))};
    });
  }
  return {aggregate("dilation", reps)};
}

inline Records run_check(const Context& cx) {
  static const std::map<std::string, std::function<Records(const Context&)>> table{
      {"spectrum", check_spectrum},   {"lemma22-audit", check_lemma22}, {"lemma21", check_lemma21},
      {"lemma31", check_lemma31},     {"occupancy", check_occupancy},   {"theorem", check_theorem},
      {"energy-chain", check_energy_chain}, {"forces", check_forces}, {"dilation", check_dilation}};
  return table.at(cx.spec.name)(cx);
}

struct RunResult {
  Json report = Json::array();
  bool violated{false};
};

/// Executes every check in order. InvalidArgument from inside a check means the scenario asked
/// for something outside a hypothesis and is rethrown as ParseError.
inline RunResult run(const Scenario& sc, const std::function<void(const std::string&)>& log = {}) {
  const Workspace ws = resolve(sc);
  RunResult out;
  for (std::size_t i = 0; i < sc.checks.size(); ++i) {
    if (log) log("running check " + sc.checks[i].name);
    Records recs;
    try {
      recs = run_check(Context{sc, ws, i, sc.checks[i]});
    } catch (const InvalidArgument& e) {
      throw ParseError("check '" + sc.checks[i].name + "': " + e.what());
    }
    for (auto& r : recs) {
      if (r.value("applicable", true) && !r.value("satisfied", true)) out.violated = true;
      out.report.push_back(std::move(r));
    }
  }
  return out;
}

inline std::string summary_csv(const Json& report) {
  std::ostringstream os;
  os.precision(17);
  os << "check,applicable,satisfied,lhs,rhs,margin,instances,violations\n";
  for (const auto& r : report) {
    os << r.value("check", std::string()) << ',' << (r.value("applicable", true) ? 1 : 0) << ',' << (r.value("satisfied", true) ? 1 : 0)
       << ',' << r.value("lhs", 0.0) << ',' << r.value("rhs", 0.0) << ',' << r.value("margin", 0.0) << ','
       << r.value("instances", 1) << ',' << r.value("violations", r.value("satisfied", true) ? 0 : 1) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// sweeps

struct SweepSpec {
  std::string param;
  double from{1.0};
  double to{1.0};
  int steps{1};
  bool geometric{true};
  bool couple_nuclei{false};  // L follows N in N sweeps
};

struct SweepRow {
  double value, lhs, rhs, margin;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<double> slope;  // log-log slope of rhs - 1/2, for d_omega and N sweeps
  bool violated{false};
};

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Theorem right-hand side along one parameter. lhs is int_Omega rho of the scenario state for
/// d_omega sweeps (Omega = ball of that diameter at the first region's anchor) and N otherwise.
inline SweepResult sweep(const Scenario& sc, const SweepSpec& spec) {
  static const std::vector<std::string> params{"d_omega", "N", "L", "a"};
  if (std::find(params.begin(), params.end(), spec.param) == params.end())
    throw ParseError("sweep parameter must be one of d_omega, N, L, a");
  if (spec.steps < 1) throw ParseError("sweep needs steps >= 1");
  if (!sc.frame) throw ParseError("sweep needs a frame");
  const Workspace ws = resolve(sc);
  int electrons = ws.state ? ws.state->electrons() : sc.sweep.value("N", 2);
  int nuclei = sc.frame->size();
  const double z = sc.frame->max_charge();
  double a = sc.frame->separation_floor().value_or(sc.sweep.value("a", 0.0));
  if (!(a > 0)) throw ParseError("sweep needs a separation floor a");
  double d = sc.regions.empty() ? sc.sweep.value("d_omega", 1.0) : diameter(sc.regions.front());
  const Vec3 anchor = sc.regions.empty() ? sc.frame->nuclei().front().position : sc.regions.front().anchor();
  if (spec.geometric && !(spec.from > 0 && spec.to > 0)) throw ParseError("geometric sweep needs positive endpoints");

  SweepResult out;
  std::vector<double> xs, ys;
  for (int k = 0; k < spec.steps; ++k) {
    const double t = spec.steps == 1 ? 0.0 : double(k) / (spec.steps - 1);
    double v = spec.geometric ? spec.from * std::pow(spec.to / spec.from, t) : spec.from + (spec.to - spec.from) * t;
    if (spec.param == "N" || spec.param == "L") v = std::round(v);
    if (!out.rows.empty() && v == out.rows.back().value) continue;
    if (spec.param == "d_omega") d = v;
    if (spec.param == "a") a = v;
    if (spec.param == "L") nuclei = static_cast<int>(v);
    if (spec.param == "N") {
      electrons = static_cast<int>(v);
      if (spec.couple_nuclei) nuclei = electrons;
    }
    const double rhs = theorem_rhs(electrons, nuclei, z, a, d);
    double lhs = electrons;
    if (ws.state && spec.param == "d_omega") lhs = functionals(*ws.state, Region(Ball{anchor, d / 2}), sc.overlap_tol).rho_integral;
    out.rows.push_back({v, lhs, rhs, rhs - lhs});
    if (lhs > rhs + 1e-9) out.violated = true;
    xs.push_back(v);
    ys.push_back(rhs - 0.5);
  }
  if ((spec.param == "d_omega" || spec.param == "N") && xs.size() >= 2) out.slope = loglog_slope(xs, ys);
  return out;
}

inline std::string sweep_csv(const SweepSpec& spec, const SweepResult& r) {
  std::ostringstream os;
  os.precision(17);
  os << spec.param << ",lhs,rhs,margin\n";
  for (const auto& row : r.rows) os << row.value << ',' << row.lhs << ',' << row.rhs << ',' << row.margin << '\n';
  return os.str();
}

}  // namespace rhobound::scenario
