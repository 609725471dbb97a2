#include "sqm/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace sqm {

namespace {

// ---- YAML access with positions ----------------------------------------------

struct Ctx {
  std::string file;

  [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
    YAML::Mark m = n.Mark();
    throw ScenarioError(file, m.line + 1, m.column + 1, msg);
  }
  void keys(const YAML::Node& n, const std::set<std::string>& allowed, const std::string& where) const {
    if (!n.IsMap()) fail(n, where + " must be a mapping");
    for (const auto& kv : n) {
      auto k = kv.first.as<std::string>();
      if (!allowed.count(k)) fail(kv.first, "unknown key '" + k + "' in " + where);
    }
  }
  std::string str(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a scalar");
    return n.as<std::string>();
  }
  double num(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be a number");
    try {
      return n.as<double>();
    } catch (const YAML::Exception&) {
      fail(n, what + " must be a number, got '" + n.as<std::string>() + "'");
    }
  }
  long integer(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) fail(n, what + " must be an integer");
    try {
      return n.as<long>();
    } catch (const YAML::Exception&) {
      fail(n, what + " must be an integer, got '" + n.as<std::string>() + "'");
    }
  }
  bool boolean(const YAML::Node& n, const std::string& what) const {
    try {
      return n.as<bool>();
    } catch (const YAML::Exception&) {
      fail(n, what + " must be true or false");
    }
  }
};

Expect parse_expect(const Ctx& c, const YAML::Node& n) {
  std::string s = c.str(n, "expect");
  if (s == "holds" || s == "hold" || s == "pass") return Expect::Holds;
  if (s == "violated") return Expect::Violated;
  if (s == "exploratory") return Expect::Exploratory;
  c.fail(n, "expect must be holds, violated or exploratory, got '" + s + "'");
}

// ---- fields -------------------------------------------------------------------

struct Env {
  Ctx ctx;
  std::vector<std::string> coords;
  SymbolTable scalars;
  std::map<std::string, Field> fields;

  Expr expr(const YAML::Node& n, const std::string& what) const {
    std::string text = ctx.str(n, what);
    try {
      return parse(text, coords, scalars);
    } catch (const ParseError& e) {
      YAML::Mark m = n.Mark();
      // quoted scalars start one column later
      int col = m.column + 1 + static_cast<int>(e.position()) + (n.Tag() == "!" ? 1 : 0);
      throw ScenarioError(ctx.file, m.line + 1, col, what + ": " + e.what());
    }
  }
  Field field(const YAML::Node& n, const std::string& what) const {
    if (n.IsScalar()) {
      auto it = fields.find(n.as<std::string>());
      if (it != fields.end()) return it->second;
      return Field::scalar(expr(n, what));
    }
    if (!n.IsSequence() || n.size() == 0) ctx.fail(n, what + " must be an expression, a field name or a matrix");
    const int rows = static_cast<int>(n.size());
    int cols = -1;
    std::vector<Expr> es;
    for (const auto& row : n) {
      if (!row.IsSequence()) ctx.fail(row, what + ": matrix rows must be lists");
      if (cols < 0) cols = static_cast<int>(row.size());
      if (static_cast<int>(row.size()) != cols) ctx.fail(row, what + ": ragged matrix");
      for (const auto& e : row) es.push_back(expr(e, what));
    }
    bool constant = std::all_of(es.begin(), es.end(), [](const Expr& e) { return e.is_const(); });
    if (constant) {
      Mat m(rows, cols);
      for (int r = 0; r < rows; ++r)
        for (int k = 0; k < cols; ++k) m(r, k) = es[static_cast<std::size_t>(r * cols + k)].node().value;
      return Field::constant(m);
    }
    return Field::grid(rows, cols, es);
  }
  Mat constant(const YAML::Node& n, const std::string& what) const {
    Field f = field(n, what);
    if (f.mask() != 0) ctx.fail(n, what + " must be constant");
    return value(f, std::vector<double>(coords.size(), 0.0));
  }
};

const std::set<std::string> kFieldCtors{"witten", "dolbeault", "de_rham", "quasicomplex", "kahler",
                                         "hyperkahler", "hkt_conformal", "torsion_rotate"};

std::vector<std::string> geometry_coords(const Ctx& c, const YAML::Node& params) {
  if (params["geometry"] && params["geometry"].IsMap() && params["geometry"]["gibbons_hawking"])
    return {"x", "y", "z", "t"};
  if (params["gibbons_hawking"]) return {"x", "y", "z", "t"};
  int D = params["D"] ? static_cast<int>(c.integer(params["D"], "D")) : 4;
  return real_coords(D);
}

std::vector<std::string> coords_for(const Ctx& c, const std::string& ctor, const YAML::Node& params) {
  auto dim = [&](const char* k, int def) { return params[k] ? static_cast<int>(c.integer(params[k], k)) : def; };
  if (ctor == "witten") return {"x"};
  if (ctor == "dolbeault") return complex_coords(dim("d", 1));
  if (ctor == "de_rham" || ctor == "quasicomplex") return real_coords(dim("D", 2));
  if (ctor == "kahler" || ctor == "hyperkahler") return geometry_coords(c, params);
  if (ctor == "hkt_conformal") return complex_coords(2);
  if (ctor == "torsion_rotate") {
    YAML::Node base = params["base"];
    if (!base || !base.IsMap() || !base["constructor"]) c.fail(params, "torsion_rotate needs base: {constructor: ...}");
    std::string b = c.str(base["constructor"], "constructor");
    return coords_for(c, b, base["params"] ? base["params"] : YAML::Node(YAML::NodeType::Map));
  }
  return {};
}

struct GeoChoice {
  GeometryData G;
  std::optional<Field> omega;
  std::string orientation;
};

GeoChoice build_geometry(const Env& env, const YAML::Node& g, const SampleSpec& s) {
  const Ctx& c = env.ctx;
  c.keys(g, {"warped", "omega", "frame", "gibbons_hawking"}, "geometry");
  if (g.size() != 1) c.fail(g, "geometry needs exactly one of warped, omega, frame, gibbons_hawking");
  if (g["warped"]) return {warped_kahler(env.expr(g["warped"], "warped"), env.coords), std::nullopt, ""};
  if (g["omega"]) {
    Field om = env.field(g["omega"], "omega");
    return {from_omega(om, OmegaKind::RealSymmetric, env.coords), om, ""};
  }
  if (g["frame"]) return {from_frame(env.field(g["frame"], "frame"), env.coords), std::nullopt, ""};
  const YAML::Node gh = g["gibbons_hawking"];
  c.keys(gh, {"centers", "weights", "eps", "deform"}, "gibbons_hawking");
  std::vector<std::array<double, 3>> centers;
  std::vector<double> weights;
  if (!gh["centers"] || !gh["centers"].IsSequence()) c.fail(gh, "gibbons_hawking needs a list of centers");
  for (const auto& ce : gh["centers"]) {
    if (!ce.IsSequence() || ce.size() != 3) c.fail(ce, "a center is a list of 3 numbers");
    centers.push_back({c.num(ce[0], "center"), c.num(ce[1], "center"), c.num(ce[2], "center")});
  }
  if (gh["weights"])
    for (const auto& w : gh["weights"]) weights.push_back(c.num(w, "weight"));
  else
    weights.assign(centers.size(), 1.0);
  double eps = gh["eps"] ? c.num(gh["eps"], "eps") : 1.0;
  std::string deform = gh["deform"] ? c.str(gh["deform"], "deform") : "";
  GibbonsHawking h = gibbons_hawking(centers, weights, eps, s, deform);
  return {h.geometry, std::nullopt, h.orientation};
}

Mat structure(const Env& env, const YAML::Node& n, int D, bool bar_default) {
  const Ctx& c = env.ctx;
  if (!n) return canonical_structure(0, bar_default, D);
  if (n.IsMap()) {
    c.keys(n, {"canonical", "bar"}, "structure");
    int a = n["canonical"] ? static_cast<int>(c.integer(n["canonical"], "canonical")) : 1;
    if (a < 1 || a > 3) c.fail(n["canonical"], "canonical structure index is 1, 2 or 3");
    bool bar = n["bar"] ? c.boolean(n["bar"], "bar") : bar_default;
    return canonical_structure(a - 1, bar, D);
  }
  Mat m = env.constant(n, "structure");
  if (m.rows() != D || m.cols() != D) c.fail(n, "structure must be " + std::to_string(D) + " x " + std::to_string(D));
  return m;
}

Model build_model(const Env& env, const std::string& ctor, const YAML::Node& node, const YAML::Node& params,
                  const SampleSpec& s) {
  const Ctx& c = env.ctx;
  auto has = [&](const char* k) { return static_cast<bool>(params[k]); };
  auto need = [&](const char* k) {
    if (!params[k]) c.fail(node, ctor + " needs parameter '" + k + "'");
    return params[k];
  };
  auto allow = [&](std::set<std::string> ks) { c.keys(params, ks, ctor + " params"); };
  auto square = [&](const Field& f, int n, const char* what) {
    if (f.rows() != n || f.cols() != n) c.fail(params[what], std::string(what) + " must be " + std::to_string(n) + " x " + std::to_string(n));
  };

  if (ctor == "witten") {
    allow({"W"});
    return witten(env.expr(need("W"), "W"));
  }
  if (ctor == "free_complex") {
    allow({"d"});
    return free_complex(static_cast<int>(c.integer(need("d"), "d")));
  }
  if (ctor == "free_real") {
    allow({"D"});
    return free_real(static_cast<int>(c.integer(need("D"), "D")));
  }
  if (ctor == "dolbeault") {
    allow({"d", "omega", "W"});
    int d = has("d") ? static_cast<int>(c.integer(params["d"], "d")) : 1;
    Field om = env.field(need("omega"), "omega");
    square(om, d, "omega");
    std::optional<Expr> W;
    if (has("W")) W = env.expr(params["W"], "W");
    return dolbeault(om, d, W);
  }
  if (ctor == "de_rham") {
    allow({"D", "omega", "W", "torsion"});
    int D = has("D") ? static_cast<int>(c.integer(params["D"], "D")) : 2;
    Field om = env.field(need("omega"), "omega");
    square(om, D, "omega");
    std::optional<Expr> W;
    std::optional<Field> B;
    if (has("W")) W = env.expr(params["W"], "W");
    if (has("torsion")) {
      B = env.field(params["torsion"], "torsion");
      square(*B, D, "torsion");
    }
    return de_rham(om, D, W, B);
  }
  if (ctor == "quasicomplex") {
    allow({"D", "omega"});
    int D = has("D") ? static_cast<int>(c.integer(params["D"], "D")) : 2;
    Field om = env.field(need("omega"), "omega");
    square(om, D, "omega");
    return quasicomplex(om, D);
  }
  if (ctor == "kahler") {
    allow({"D", "geometry", "structure", "label"});
    GeoChoice g = build_geometry(env, need("geometry"), s);
    Mat I = structure(env, params["structure"], g.G.D, g.orientation == "eta_bar");
    std::string label = has("label") ? c.str(params["label"], "label") : "kahler";
    return kahler(g.G, I, label, g.omega);
  }
  if (ctor == "hyperkahler") {
    allow({"D", "geometry", "triple", "label"});
    GeoChoice g = build_geometry(env, need("geometry"), s);
    std::string t = has("triple") ? c.str(params["triple"], "triple") : "auto";
    bool bar;
    if (t == "eta") bar = false;
    else if (t == "eta_bar") bar = true;
    else if (t == "auto") bar = g.orientation == "eta_bar";
    else c.fail(params["triple"], "triple must be eta, eta_bar or auto");
    if (t == "auto" && g.orientation == "none") c.fail(params["geometry"], "neither eta nor eta_bar triple is covariantly constant here");
    std::string label = has("label") ? c.str(params["label"], "label") : "hyperkahler";
    const int D = g.G.D;
    return hyperkahler(g.G, {canonical_structure(0, bar, D), canonical_structure(1, bar, D), canonical_structure(2, bar, D)},
                       label);
  }
  if (ctor == "hkt_conformal") {
    allow({"g", "drop"});
    std::vector<std::string> drop;
    if (has("drop")) {
      for (const auto& d : params["drop"]) {
        std::string v = c.str(d, "drop");
        if (std::find(env.coords.begin(), env.coords.end(), v) == env.coords.end())
          c.fail(d, "cannot drop unknown coordinate '" + v + "'");
        drop.push_back(v);
      }
    }
    return hkt_conformal(env.expr(need("g"), "g"), drop);
  }
  if (ctor == "okt_flat") {
    allow({});
    return okt_flat();
  }
  if (ctor == "instanton") {
    allow({"rho"});
    return instanton(has("rho") ? c.num(params["rho"], "rho") : 1.0);
  }
  if (ctor == "gauge_sym3") {
    allow({});
    return gauge_sym3();
  }
  if (ctor == "gauge_sym3_resolved") {
    allow({"g0"});
    return gauge_sym3_resolved(has("g0") ? c.num(params["g0"], "g0") : 1.0);
  }
  if (ctor == "wz_modes") {
    allow({"modes"});
    std::vector<std::array<int, 3>> modes;
    const YAML::Node ms = need("modes");
    if (!ms.IsSequence() || ms.size() == 0) c.fail(ms, "modes must be a non-empty list");
    for (const auto& m : ms) {
      if (!m.IsSequence() || m.size() != 3) c.fail(m, "a mode is a list of 3 integers");
      modes.push_back({static_cast<int>(c.integer(m[0], "mode")), static_cast<int>(c.integer(m[1], "mode")),
                       static_cast<int>(c.integer(m[2], "mode"))});
    }
    if (modes.size() > 4) c.fail(ms, "at most 4 modes");
    return wz_modes(modes);
  }
  if (ctor == "torsion_rotate") {
    allow({"base", "B", "kind"});
    const YAML::Node base = need("base");
    c.keys(base, {"constructor", "params"}, "base");
    std::string b = c.str(base["constructor"], "constructor");
    YAML::Node bp = base["params"] ? base["params"] : YAML::Node(YAML::NodeType::Map);
    Model m = build_model(env, b, base, bp, s);
    if (!m.rep.psibar.size()) c.fail(base, "torsion_rotate needs a complex-fermion base model");
    Field B = env.field(need("B"), "B");
    square(B, m.rep.modes, "B");
    std::string k = has("kind") ? c.str(params["kind"], "kind") : "holomorphic";
    TorsionKind kind;
    if (k == "holomorphic") kind = TorsionKind::Holomorphic;
    else if (k == "antiholomorphic") kind = TorsionKind::Antiholomorphic;
    else c.fail(params["kind"], "kind must be holomorphic or antiholomorphic");
    return torsion_rotate(m, B, kind);
  }
  c.fail(node["constructor"] ? node["constructor"] : node, "unknown constructor '" + ctor + "' (see list-models)");
}

}  // namespace

std::vector<std::string> constructor_coords(const std::string& constructor, int dim) {
  if (constructor == "witten") return {"x"};
  if (constructor == "dolbeault" || constructor == "free_complex") return complex_coords(dim);
  if (constructor == "hkt_conformal") return complex_coords(2);
  if (constructor == "gibbons_hawking") return {"x", "y", "z", "t"};
  return real_coords(dim);
}

Scenario parse_scenario(const std::string& text, const std::string& path) {
  Ctx c{path};
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(path, e.mark.line + 1, e.mark.column + 1, e.msg);
  }
  if (!root.IsMap()) throw ScenarioError(path, 1, 1, "scenario must be a mapping");
  c.keys(root, {"name", "description", "coordinates", "fields", "model", "expect", "checks", "tolerance", "seed", "points"},
         "scenario");

  Scenario sc;
  sc.path = path;
  sc.name = root["name"] ? c.str(root["name"], "name") : path;
  if (root["description"]) sc.description = c.str(root["description"], "description");

  const YAML::Node model = root["model"];
  if (!model) throw ScenarioError(path, 1, 1, "scenario needs a model section");
  c.keys(model, {"constructor", "params"}, "model");
  if (!model["constructor"]) c.fail(model, "model needs a constructor");
  sc.constructor = c.str(model["constructor"], "constructor");
  const YAML::Node params = model["params"] ? model["params"] : YAML::Node(YAML::NodeType::Map);
  if (!params.IsMap()) c.fail(params, "params must be a mapping");

  Env env{c, {}, {}, {}};
  std::optional<Model> built;
  if (kFieldCtors.count(sc.constructor)) {
    env.coords = coords_for(c, sc.constructor, params);
  } else {
    built = build_model(env, sc.constructor, model, params, SampleSpec{});
    env.coords = built->coords;
  }

  // coordinates and sampling
  const YAML::Node co = root["coordinates"];
  std::vector<std::pair<double, double>> box(env.coords.size(), {-1.0, 1.0});
  bool box_given = false;
  if (co) {
    c.keys(co, {"names", "box", "exclusions"}, "coordinates");
    if (co["names"]) {
      std::vector<std::string> names;
      for (const auto& n : co["names"]) names.push_back(c.str(n, "coordinate name"));
      if (names != env.coords) {
        std::string want;
        for (const auto& n : env.coords) want += (want.empty() ? "" : ", ") + n;
        c.fail(co["names"], sc.constructor + " uses coordinates [" + want + "]");
      }
    }
    auto pair = [&](const YAML::Node& n) {
      if (!n.IsSequence() || n.size() != 2) c.fail(n, "a box is [low, high]");
      double lo = c.num(n[0], "box"), hi = c.num(n[1], "box");
      if (!(lo < hi)) c.fail(n, "box needs low < high");
      return std::make_pair(lo, hi);
    };
    if (const YAML::Node b = co["box"]) {
      box_given = true;
      if (b.IsSequence()) {
        box.assign(env.coords.size(), pair(b));
      } else if (b.IsMap()) {
        for (const auto& kv : b) {
          std::string k = kv.first.as<std::string>();
          auto it = std::find(env.coords.begin(), env.coords.end(), k);
          if (k == "default") {
            auto p = pair(kv.second);
            for (auto& x : box) x = p;
            continue;
          }
          if (it == env.coords.end()) c.fail(kv.first, "unknown coordinate '" + k + "'");
        }
        for (const auto& kv : b) {
          std::string k = kv.first.as<std::string>();
          if (k == "default") continue;
          box[static_cast<std::size_t>(std::find(env.coords.begin(), env.coords.end(), k) - env.coords.begin())] = pair(kv.second);
        }
      } else {
        c.fail(b, "box must be [low, high] or a mapping from coordinate to [low, high]");
      }
    }
  }

  // fields, in order; scalar fields become symbols for later expressions
  if (const YAML::Node fs = root["fields"]) {
    if (!fs.IsMap()) c.fail(fs, "fields must be a mapping");
    for (const auto& kv : fs) {
      std::string name = kv.first.as<std::string>();
      if (std::find(env.coords.begin(), env.coords.end(), name) != env.coords.end())
        c.fail(kv.first, "field '" + name + "' shadows a coordinate");
      Field f = env.field(kv.second, "field " + name);
      env.fields[name] = f;
      if (kv.second.IsScalar() && f.is_scalar()) {
        // re-parse to keep the expression for symbol use
        env.scalars[name] = env.expr(kv.second, "field " + name);
      }
    }
  }

  sc.coords = env.coords;
  sc.fields = env.fields;
  sc.samples.box = box;
  if (co && co["exclusions"]) {
    for (const auto& e : co["exclusions"]) {
      c.keys(e, {"nonzero", "positive", "margin"}, "exclusion");
      Exclusion x;
      const YAML::Node t = e["nonzero"] ? e["nonzero"] : e["positive"];
      if (!t || (e["nonzero"] && e["positive"])) c.fail(e, "an exclusion has exactly one of nonzero, positive");
      x.kind = e["nonzero"] ? Exclusion::Kind::Nonzero : Exclusion::Kind::Positive;
      x.expr = env.expr(t, "exclusion");
      x.text = c.str(t, "exclusion") + (e["nonzero"] ? " != 0" : " > 0");
      if (e["margin"]) x.margin = c.num(e["margin"], "margin");
      sc.samples.exclusions.push_back(x);
    }
  }
  if (root["seed"]) {
    long sd = c.integer(root["seed"], "seed");
    if (sd < 0) c.fail(root["seed"], "seed must be non-negative");
    sc.samples.seed = static_cast<std::uint64_t>(sd);
  }
  if (root["points"]) {
    long n = c.integer(root["points"], "points");
    if (n < 1) c.fail(root["points"], "points must be positive");
    sc.samples.n_points = static_cast<int>(n);
  }

  try {
    sc.model = built ? *built : build_model(env, sc.constructor, model, params, sc.samples);
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    c.fail(model, sc.constructor + ": " + e.what());
  }
  // the model's own domain when the scenario gives none
  if (!box_given && !sc.model.samples.box.empty()) {
    sc.samples.box = sc.model.samples.box;
    for (const auto& x : sc.model.samples.exclusions) sc.samples.exclusions.push_back(x);
    if (!root["points"]) sc.samples.n_points = sc.model.samples.n_points;
  }
  if (sc.model.coords != sc.coords) {
    // cyclic reductions drop coordinates; keep the box of the survivors
    std::vector<std::pair<double, double>> nb;
    for (const auto& n : sc.model.coords) {
      auto it = std::find(sc.coords.begin(), sc.coords.end(), n);
      nb.push_back(it == sc.coords.end() ? std::make_pair(-1.0, 1.0)
                                         : sc.samples.box[static_cast<std::size_t>(it - sc.coords.begin())]);
    }
    sc.samples.box = nb;
    if (!sc.samples.exclusions.empty()) c.fail(co, "exclusions are not supported together with dropped coordinates");
  }

  // expectations and checks
  if (const YAML::Node ex = root["expect"]) {
    c.keys(ex, {"kahler"}, "expect");
    if (ex["kahler"]) {
      Expect k = parse_expect(c, ex["kahler"]);
      if (k == Expect::Exploratory) c.fail(ex["kahler"], "kahler is holds or violated");
      sc.options.kahler = k == Expect::Holds;
    }
  }
  if (root["tolerance"]) {
    sc.tolerance = c.num(root["tolerance"], "tolerance");
    if (!(*sc.tolerance > 0)) c.fail(root["tolerance"], "tolerance must be positive");
  }
  if (const YAML::Node ch = root["checks"]) {
    if (!ch.IsSequence()) c.fail(ch, "checks must be a list");
    for (const auto& item : ch) {
      CheckSpec spec;
      spec.line = item.Mark().line + 1;
      spec.col = item.Mark().column + 1;
      if (item.IsScalar()) {
        spec.text = item.as<std::string>();
      } else {
        c.keys(item, {"suite", "relation", "identity", "expect", "tol"}, "check");
        int kinds = !!item["suite"] + !!item["relation"] + !!item["identity"];
        if (kinds != 1) c.fail(item, "a check has exactly one of suite, relation, identity");
        if (item["suite"]) spec.text = c.str(item["suite"], "suite");
        if (item["relation"]) spec.kind = CheckSpec::Kind::Relation, spec.text = c.str(item["relation"], "relation");
        if (item["identity"]) spec.kind = CheckSpec::Kind::Identity, spec.text = c.str(item["identity"], "identity");
        if (item["expect"]) spec.expect = parse_expect(c, item["expect"]);
        if (item["tol"]) spec.tol = c.num(item["tol"], "tol");
      }
      static const std::set<std::string> suites{"all", "n2", "extended", "relations", "theorem1", "theorem2",
                                                "geometry", "replay"};
      if (spec.kind == CheckSpec::Kind::Suite && !suites.count(spec.text))
        c.fail(item, "unknown suite '" + spec.text + "'");
      if (spec.kind == CheckSpec::Kind::Relation) {
        bool found = std::any_of(sc.model.relations.begin(), sc.model.relations.end(),
                                 [&](const ModelRelation& r) { return r.name == spec.text; });
        if (!found) {
          std::string names;
          for (const auto& r : sc.model.relations) names += "\n  " + r.name;
          c.fail(item, "model " + sc.model.name + " has no relation '" + spec.text + "'; it has:" + names);
        }
      }
      if (spec.kind == CheckSpec::Kind::Identity) {
        auto eq = spec.text.find('=');
        if (eq == std::string::npos || spec.text.find('=', eq + 1) != std::string::npos)
          c.fail(item, "an identity is 'lhs = rhs'");
        try {
          (void)eval_op_expression(spec.text.substr(0, eq), sc.model);
          (void)eval_op_expression(spec.text.substr(eq + 1), sc.model);
        } catch (const std::exception& e) {
          c.fail(item, std::string("identity: ") + e.what());
        }
      }
      sc.checks.push_back(spec);
    }
  } else {
    sc.checks.push_back({CheckSpec::Kind::Suite, "all", std::nullopt, std::nullopt, 0, 0});
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path, 0, 0, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

// ---- operator expressions -------------------------------------------------------

namespace {

class OpParser {
 public:
  OpParser(const std::string& t, const Model& m) : t_(t), m_(m) {
    names_ = m.op_names();
    // longest first, so "F1+" wins over "F1"
    std::sort(names_.begin(), names_.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
  }

  DiffOp parse() {
    Val v = sum();
    skip();
    if (i_ != t_.size()) err("unexpected '" + std::string(1, t_[i_]) + "'");
    return as_op(v);
  }

 private:
  struct Val {
    std::optional<DiffOp> op;
    cplx c = 0;
  };

  [[noreturn]] void err(const std::string& msg) const {
    throw std::invalid_argument(msg + " at position " + std::to_string(i_));
  }
  void skip() {
    while (i_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[i_]))) ++i_;
  }
  bool eat(char ch) {
    skip();
    if (i_ < t_.size() && t_[i_] == ch) {
      ++i_;
      return true;
    }
    return false;
  }
  void expect(char ch) {
    if (!eat(ch)) err(std::string("expected '") + ch + "'");
  }
  DiffOp as_op(const Val& v) const {
    if (v.op) return *v.op;
    return mult(m_.coords, Mat(v.c * m_.rep.identity()));
  }
  Val add(const Val& a, const Val& b, double s) const {
    if (!a.op && !b.op) return {std::nullopt, a.c + s * b.c};
    return {as_op(a) + cplx(s) * as_op(b), 0};
  }
  Val mul(const Val& a, const Val& b) const {
    if (!a.op && !b.op) return {std::nullopt, a.c * b.c};
    if (!a.op) return {a.c * *b.op, 0};
    if (!b.op) return {b.c * *a.op, 0};
    return {compose(*a.op, *b.op), 0};
  }

  Val sum() {
    Val v;
    skip();
    if (eat('-')) v = mul({std::nullopt, -1.0}, product());
    else v = product();
    for (;;) {
      if (eat('+')) v = add(v, product(), 1);
      else if (eat('-')) v = add(v, product(), -1);
      else return v;
    }
  }
  Val product() {
    Val v = factor();
    for (;;) {
      if (eat('*')) {
        v = mul(v, factor());
      } else if (eat('/')) {
        Val d = factor();
        if (d.op || d.c == 0.0) err("can only divide by a nonzero number");
        v = mul(v, {std::nullopt, 1.0 / d.c});
      } else {
        return v;
      }
    }
  }
  Val factor() {
    skip();
    if (i_ >= t_.size()) err("unexpected end");
    if (eat('(')) {
      Val v = sum();
      expect(')');
      return v;
    }
    if (eat('[')) {
      Val a = sum();
      expect(',');
      Val b = sum();
      expect(']');
      return {commutator(as_op(a), as_op(b)), 0};
    }
    if (eat('{')) {
      Val a = sum();
      expect(',');
      Val b = sum();
      expect('}');
      return {anticommutator(as_op(a), as_op(b)), 0};
    }
    if (std::isdigit(static_cast<unsigned char>(t_[i_])) || t_[i_] == '.') {
      std::size_t used = 0;
      double x = std::stod(t_.substr(i_), &used);
      i_ += used;
      return {std::nullopt, x};
    }
    for (const char* fn : {"dagger", "adj"}) {
      std::string f = fn;
      if (t_.compare(i_, f.size(), f) == 0 && i_ + f.size() < t_.size() && t_[i_ + f.size()] == '(') {
        i_ += f.size() + 1;
        Val a = sum();
        expect(')');
        DiffOp o = as_op(a);
        return {f == "dagger" ? naive_dagger(o) : adjoint_with_measure(o, m_.measure), 0};
      }
    }
    for (const auto& n : names_) {
      if (t_.compare(i_, n.size(), n) != 0) continue;
      // a name must not run on into more identifier characters
      std::size_t e = i_ + n.size();
      if (e < t_.size() && (std::isalnum(static_cast<unsigned char>(t_[e])) || t_[e] == '_')) continue;
      i_ = e;
      return {m_.op(n), 0};
    }
    if (t_[i_] == 'i' && (i_ + 1 == t_.size() || !std::isalnum(static_cast<unsigned char>(t_[i_ + 1])))) {
      ++i_;
      return {std::nullopt, cplx(0, 1)};
    }
    std::size_t e = i_;
    while (e < t_.size() && (std::isalnum(static_cast<unsigned char>(t_[e])) || t_[e] == '_')) ++e;
    err("unknown operator '" + t_.substr(i_, std::max<std::size_t>(1, e - i_)) + "'");
  }

  std::string t_;
  const Model& m_;
  std::vector<std::string> names_;
  std::size_t i_ = 0;
};

std::vector<CheckReport> run_suite(const std::string& s, const Model& m, const SampleSpec& sp, const VerifyOptions& o) {
  if (s == "all") return verify_model(m, sp, o);
  if (s == "n2") {
    std::vector<CheckReport> r;
    for (std::size_t i = 0; i < m.supercharges.size(); ++i) {
      auto x = check_n2(m, sp, i);
      r.insert(r.end(), x.begin(), x.end());
    }
    return r;
  }
  if (s == "extended") return check_extended(m, sp);
  if (s == "relations") return check_relations(m, sp);
  if (s == "theorem1") return check_theorem1(m, sp, o.kahler);
  if (s == "theorem2") return check_theorem2(m, sp);
  if (s == "geometry") {
    if (!m.geometry_checks) return {};
    return m.geometry_checks(sp, o.kahler ? Expect::Holds : Expect::Violated);
  }
  return {check_replay(m, sp)};
}

}  // namespace

DiffOp eval_op_expression(const std::string& text, const Model& m) { return OpParser(text, m).parse(); }

RunResult run_scenario(const Scenario& sc, const RunOptions& o) {
  SampleSpec sp = sc.samples;
  if (o.seed) sp.seed = *o.seed;
  if (o.points) sp.n_points = *o.points;
  std::optional<double> tol = o.tol ? o.tol : sc.tolerance;

  RunResult out;
  for (const auto& spec : sc.checks) {
    std::vector<CheckReport> got;
    switch (spec.kind) {
      case CheckSpec::Kind::Suite: got = run_suite(spec.text, sc.model, sp, sc.options); break;
      case CheckSpec::Kind::Relation:
        for (const auto& r : sc.model.relations)
          if (r.name == spec.text)
            got.push_back(check_zero(r.name, r.operands, r.diff(), sp, spec.expect.value_or(r.expect), r.tol));
        break;
      case CheckSpec::Kind::Identity: {
        auto eq = spec.text.find('=');
        DiffOp d = eval_op_expression(spec.text.substr(0, eq), sc.model) - eval_op_expression(spec.text.substr(eq + 1), sc.model);
        got.push_back(check_zero(spec.text, {}, d, sp, spec.expect.value_or(Expect::Holds)));
        break;
      }
    }
    for (auto& r : got) {
      // explicit tolerances re-judge; expectations on suites apply to every check in it
      if (spec.kind == CheckSpec::Kind::Suite && spec.expect) r.expect = *spec.expect;
      // exact checks (replay) ignore the global tolerance
      double t = spec.tol ? *spec.tol : tol && r.tol > 0 ? *tol : r.tol;
      if (t != r.tol || (spec.kind == CheckSpec::Kind::Suite && spec.expect)) {
        std::string note = r.note;
        r = make_report(r.name, r.operands, r.residual, r.expect, t);
        r.note = note;
      }
      out.checks.push_back(std::move(r));
    }
  }
  out.ok = all_ok(out.checks, o.fail_on_gray);
  out.report = report_json(sc.path, sc.model, sp, out.checks, o.fail_on_gray);
  return out;
}

}  // namespace sqm
