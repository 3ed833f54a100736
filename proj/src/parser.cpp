#include "dynplan/parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

namespace dynplan {

ParseError::ParseError(int line, int column, const std::string& message)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

struct SExpr {
  bool list = false;
  std::string atom;
  std::vector<SExpr> items;
  int line = 0;
  int column = 0;

  bool is(std::string_view s) const { return !list && atom == s; }
  [[noreturn]] void fail(const std::string& message) const { throw ParseError(line, column, message); }
  const std::string& head() const {
    if (!list || items.empty() || items[0].list) fail("expected a list starting with a keyword");
    return items[0].atom;
  }
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  SExpr read_document() {
    skip();
    if (pos_ >= text_.size()) throw ParseError(line_, col_, "empty document");
    SExpr doc = read();
    skip();
    if (pos_ < text_.size()) throw ParseError(line_, col_, "trailing content after document");
    return doc;
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  SExpr read() {
    skip();
    if (pos_ >= text_.size()) throw ParseError(line_, col_, "unexpected end of input");
    SExpr out;
    out.line = line_;
    out.column = col_;
    const char c = text_[pos_];
    if (c == ')') throw ParseError(line_, col_, "unexpected ')'");
    if (c == '(') {
      out.list = true;
      advance();
      for (;;) {
        skip();
        if (pos_ >= text_.size()) throw ParseError(out.line, out.column, "unclosed '('");
        if (text_[pos_] == ')') {
          advance();
          break;
        }
        out.items.push_back(read());
      }
      return out;
    }
    while (pos_ < text_.size()) {
      const char d = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == ';') break;
      out.atom.push_back(d);
      advance();
    }
    return out;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

std::optional<double> as_number(const SExpr& e) {
  if (e.list || e.atom.empty()) return std::nullopt;
  const char c = e.atom[0];
  if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.')) return std::nullopt;
  std::string s = e.atom;
  if (s[0] == '+') s.erase(0, 1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

using Bindings = std::map<std::string, std::string>;

struct Param {
  std::string var;
  std::string type;
};

struct FluentSchema {
  std::vector<std::string> param_types;
  Sort sort = Sort::boolean;
};

class Loader {
 public:
  explicit Loader(const ValidationOptions& options) : options_(options) {}

  DomainTheory load(const SExpr& doc) {
    if (!doc.list || doc.items.size() < 2 || !doc.items[0].is("problem") || doc.items[1].list) {
      doc.fail("document must start with (problem <name> ...)");
    }
    builder_ = DomainBuilder(doc.items[1].atom);
    // Declarations first so that later sections may appear in any order.
    for (std::size_t i = 2; i < doc.items.size(); ++i) {
      const SExpr& item = doc.items[i];
      const std::string& h = item.head();
      if (h == "types") read_types(item);
    }
    for (std::size_t i = 2; i < doc.items.size(); ++i) {
      const SExpr& item = doc.items[i];
      if (item.head() == "objects") read_objects(item);
    }
    for (std::size_t i = 2; i < doc.items.size(); ++i) {
      const SExpr& item = doc.items[i];
      if (item.head() == "fluent") read_fluent(item);
    }
    bool have_goal = false;
    for (std::size_t i = 2; i < doc.items.size(); ++i) {
      const SExpr& item = doc.items[i];
      const std::string& h = item.head();
      if (h == "types" || h == "objects" || h == "fluent") continue;
      if (h == "init") {
        read_init(item);
      } else if (h == "action") {
        read_action(item);
      } else if (h == "goal") {
        expect_size(item, 2);
        builder_.set_goal(formula(item.items[1], {}));
        have_goal = true;
      } else if (h == "heuristic") {
        expect_size(item, 2);
        builder_.set_heuristic(numeric(item.items[1], {}));
      } else if (h == "finish-cost") {
        expect_size(item, 2);
        builder_.set_finish_cost(numeric(item.items[1], {}));
      } else {
        item.items[0].fail("unknown section '" + h + "'");
      }
    }
    if (!have_goal) doc.fail("problem has no (goal ...) section");
    return std::move(builder_).build(options_);
  }

 private:
  static void expect_size(const SExpr& e, std::size_t n) {
    if (e.items.size() != n) {
      e.fail("'" + e.head() + "' expects " + std::to_string(n - 1) + " argument(s)");
    }
  }

  // --- declarations ---------------------------------------------------------

  void read_types(const SExpr& item) {
    for (std::size_t i = 1; i < item.items.size(); ++i) {
      const SExpr& def = item.items[i];
      if (!def.list || def.items.size() < 2) def.fail("type definition must be (supertype subtype...)");
      for (std::size_t j = 1; j < def.items.size(); ++j) {
        subtypes_[def.items[0].atom].push_back(def.items[j].atom);
      }
    }
  }

  void read_objects(const SExpr& item) {
    for (std::size_t i = 1; i < item.items.size(); ++i) {
      const SExpr& group = item.items[i];
      if (!group.list || group.items.empty()) group.fail("object group must be (type name...)");
      const std::string& type = group.items[0].atom;
      for (std::size_t j = 1; j < group.items.size(); ++j) {
        const SExpr& obj = group.items[j];
        if (obj.list || obj.atom.empty() || obj.atom[0] == '?') obj.fail("invalid object name");
        if (object_type_.count(obj.atom)) obj.fail("duplicate object '" + obj.atom + "'");
        object_type_.emplace(obj.atom, type);
        direct_objects_[type].push_back(obj.atom);
        object_order_.push_back(obj.atom);
      }
    }
  }

  std::vector<std::string> objects_of(const std::string& type, const SExpr& where) const {
    std::vector<std::string> out;
    bool known = false;
    std::function<void(const std::string&)> visit = [&](const std::string& t) {
      if (auto it = direct_objects_.find(t); it != direct_objects_.end()) {
        known = true;
        out.insert(out.end(), it->second.begin(), it->second.end());
      }
      if (auto it = subtypes_.find(t); it != subtypes_.end()) {
        known = true;
        for (const std::string& sub : it->second) visit(sub);
      }
    };
    visit(type);
    if (!known) where.fail("unknown type '" + type + "'");
    return out;
  }

  std::vector<Param> read_params(const SExpr& list) const {
    if (!list.list) list.fail("expected a parameter list (?var type ...)");
    if (list.items.size() % 2 != 0) list.fail("parameter list must alternate ?var and type");
    std::vector<Param> out;
    for (std::size_t i = 0; i < list.items.size(); i += 2) {
      const SExpr& v = list.items[i];
      const SExpr& t = list.items[i + 1];
      if (v.list || v.atom.size() < 2 || v.atom[0] != '?') v.fail("parameter names start with '?'");
      if (t.list) t.fail("expected a type name");
      objects_of(t.atom, t);
      out.push_back({v.atom, t.atom});
    }
    return out;
  }

  // Calls `body` once per assignment of objects to `params`, on top of `base`.
  void for_each_binding(const std::vector<Param>& params, const Bindings& base, const SExpr& where,
                        const std::function<void(const Bindings&)>& body) const {
    std::vector<std::vector<std::string>> domains;
    for (const Param& p : params) domains.push_back(objects_of(p.type, where));
    Bindings b = base;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
      if (i == params.size()) {
        body(b);
        return;
      }
      for (const std::string& o : domains[i]) {
        b[params[i].var] = o;
        rec(i + 1);
      }
    };
    rec(0);
  }

  void read_fluent(const SExpr& item) {
    if (item.items.size() < 3) item.fail("fluent declaration must be (fluent <head> bool|num [:positive])");
    const SExpr& head = item.items[1];
    FluentSchema schema;
    std::string name;
    std::vector<Param> params;
    if (head.list) {
      if (head.items.empty() || head.items[0].list) head.fail("fluent head must start with a name");
      name = head.items[0].atom;
      SExpr rest = head;
      rest.items.erase(rest.items.begin());
      params = read_params(rest);
    } else {
      name = head.atom;
    }
    const SExpr& sort = item.items[2];
    if (sort.is("bool")) schema.sort = Sort::boolean;
    else if (sort.is("num")) schema.sort = Sort::numeric;
    else sort.fail("fluent sort must be 'bool' or 'num'");
    bool positive = false;
    for (std::size_t i = 3; i < item.items.size(); ++i) {
      if (item.items[i].is(":positive")) {
        if (schema.sort != Sort::numeric) item.items[i].fail(":positive applies to numeric fluents");
        positive = true;
      } else {
        item.items[i].fail("unknown fluent attribute");
      }
    }
    if (schemas_.count(name)) head.fail("duplicate fluent '" + name + "'");
    for (const Param& p : params) schema.param_types.push_back(p.type);
    schemas_.emplace(name, schema);
    for_each_binding(params, {}, item, [&](const Bindings& b) {
      FluentDecl decl;
      decl.name = name;
      for (const Param& p : params) decl.args.push_back(b.at(p.var));
      decl.sort = schema.sort;
      decl.positive = positive;
      builder_.add_fluent(std::move(decl), positive ? 1.0 : 0.0);
    });
  }

  // --- terms and atoms -----------------------------------------------------

  std::string term(const SExpr& e, const Bindings& b) const {
    if (e.list) e.fail("expected an object or variable");
    if (!e.atom.empty() && e.atom[0] == '?') {
      auto it = b.find(e.atom);
      if (it == b.end()) e.fail("unbound variable '" + e.atom + "'");
      return it->second;
    }
    if (!object_type_.count(e.atom)) e.fail("unknown object '" + e.atom + "'");
    return e.atom;
  }

  bool is_fluent_name(const std::string& name) const { return schemas_.count(name) > 0; }

  // Resolves a fluent reference (bare name or (name args...)).
  std::pair<FluentId, Sort> atom(const SExpr& e, const Bindings& b) const {
    const std::string& name = e.list ? e.head() : e.atom;
    auto it = schemas_.find(name);
    if (it == schemas_.end()) e.fail("unknown fluent '" + name + "'");
    const FluentSchema& schema = it->second;
    const std::size_t given = e.list ? e.items.size() - 1 : 0;
    if (given != schema.param_types.size()) {
      e.fail("fluent '" + name + "' expects " + std::to_string(schema.param_types.size()) + " argument(s)");
    }
    FluentDecl probe;
    probe.name = name;
    for (std::size_t i = 0; i < given; ++i) probe.args.push_back(term(e.items[i + 1], b));
    auto id = builder_.find_fluent(probe.display());
    if (!id) e.fail("'" + probe.display() + "' is not a ground fluent (argument of the wrong type?)");
    return {*id, schema.sort};
  }

  // --- formulas and numeric expressions -------------------------------------

  std::vector<Expr> quantified(const SExpr& e, const Bindings& b,
                               const std::function<Expr(const SExpr&, const Bindings&)>& body) const {
    expect_size(e, 3);
    std::vector<Param> params = read_params(e.items[1]);
    std::vector<Expr> parts;
    for_each_binding(params, b, e, [&](const Bindings& inner) { parts.push_back(body(e.items[2], inner)); });
    return parts;
  }

  Expr formula(const SExpr& e, const Bindings& b) const {
    if (!e.list) {
      if (e.is("true")) return Expr::truth(true);
      if (e.is("false")) return Expr::truth(false);
      auto [id, sort] = atom(e, b);
      if (sort != Sort::boolean) e.fail("numeric fluent used as a formula");
      return Expr::fluent(id, sort);
    }
    const std::string& h = e.head();
    auto sub = [&](std::size_t i) { return formula(e.items[i], b); };
    auto subs = [&] {
      std::vector<Expr> out;
      for (std::size_t i = 1; i < e.items.size(); ++i) out.push_back(sub(i));
      return out;
    };
    if (h == "not") {
      expect_size(e, 2);
      return make_not(sub(1));
    }
    if (h == "and") return make_and(subs());
    if (h == "or") return make_or(subs());
    if (h == "imply") {
      expect_size(e, 3);
      return make_or({make_not(sub(1)), sub(2)});
    }
    static const std::map<std::string, Cmp> cmps = {{"<", Cmp::lt}, {"<=", Cmp::le}, {"=", Cmp::eq},
                                                    {"!=", Cmp::ne}, {">=", Cmp::ge}, {">", Cmp::gt}};
    if (auto it = cmps.find(h); it != cmps.end()) {
      expect_size(e, 3);
      return make_compare(it->second, numeric(e.items[1], b), numeric(e.items[2], b));
    }
    if (h == "same") {
      expect_size(e, 3);
      return Expr::truth(term(e.items[1], b) == term(e.items[2], b));
    }
    auto fbody = [this](const SExpr& x, const Bindings& bb) { return formula(x, bb); };
    if (h == "exists") return make_or(quantified(e, b, fbody));
    if (h == "forall") return make_and(quantified(e, b, fbody));
    if (is_fluent_name(h)) {
      auto [id, sort] = atom(e, b);
      if (sort != Sort::boolean) e.fail("numeric fluent used as a formula");
      return Expr::fluent(id, sort);
    }
    e.items[0].fail("unknown formula operator '" + h + "'");
  }

  Expr numeric(const SExpr& e, const Bindings& b) const {
    if (!e.list) {
      if (auto v = as_number(e)) return Expr::number(*v);
      auto [id, sort] = atom(e, b);
      if (sort != Sort::numeric) e.fail("boolean fluent used as a number");
      return Expr::fluent(id, sort);
    }
    const std::string& h = e.head();
    auto sub = [&](std::size_t i) { return numeric(e.items[i], b); };
    auto need_args = [&](std::size_t min) {
      if (e.items.size() < min + 1) e.fail("'" + h + "' needs at least " + std::to_string(min) + " operand(s)");
    };
    if (h == "+" || h == "*") {
      need_args(1);
      Expr acc = sub(1);
      for (std::size_t i = 2; i < e.items.size(); ++i) acc = h == "+" ? make_add(acc, sub(i)) : make_mul(acc, sub(i));
      return acc;
    }
    if (h == "-") {
      need_args(1);
      if (e.items.size() == 2) return make_sub(Expr::number(0.0), sub(1));
      expect_size(e, 3);
      return make_sub(sub(1), sub(2));
    }
    if (h == "/") {
      expect_size(e, 3);
      Expr d = sub(2);
      if (!d.is_constant() || d.constant_value() == 0.0) e.fail("division only by a non-zero constant");
      return make_mul(sub(1), Expr::number(1.0 / d.constant_value()));
    }
    if (h == "min" || h == "max") {
      need_args(1);
      std::vector<Expr> args;
      for (std::size_t i = 1; i < e.items.size(); ++i) args.push_back(sub(i));
      return h == "min" ? make_min(std::move(args)) : make_max(std::move(args));
    }
    if (h == "if") {
      expect_size(e, 4);
      return make_if(formula(e.items[1], b), sub(2), sub(3));
    }
    auto nbody = [this](const SExpr& x, const Bindings& bb) { return numeric(x, bb); };
    if (h == "sum") {
      std::vector<Expr> parts = quantified(e, b, nbody);
      Expr acc = Expr::number(0.0);
      for (Expr& p : parts) acc = make_add(acc, p);
      return acc;
    }
    if (h == "minof" || h == "maxof") {
      std::vector<Expr> parts = quantified(e, b, nbody);
      if (parts.empty()) e.fail("'" + h + "' ranges over no objects");
      return h == "minof" ? make_min(std::move(parts)) : make_max(std::move(parts));
    }
    if (is_fluent_name(h)) {
      auto [id, sort] = atom(e, b);
      if (sort != Sort::numeric) e.fail("boolean fluent used as a number");
      return Expr::fluent(id, sort);
    }
    e.items[0].fail("unknown numeric operator '" + h + "'");
  }

  // --- init, actions, effects ----------------------------------------------

  void read_init(const SExpr& item) {
    for (std::size_t i = 1; i < item.items.size(); ++i) {
      const SExpr& e = item.items[i];
      if (e.list && e.head() == "=") {
        expect_size(e, 3);
        auto [id, sort] = atom(e.items[1], {});
        const SExpr& v = e.items[2];
        if (sort == Sort::boolean) {
          if (v.is("true")) builder_.set_initial_value(id, 1.0);
          else if (v.is("false")) builder_.set_initial_value(id, 0.0);
          else v.fail("boolean fluent needs true or false");
        } else {
          auto n = as_number(v);
          if (!n) v.fail("expected a number");
          builder_.set_initial_value(id, *n);
        }
      } else if (e.list && e.head() == "not") {
        expect_size(e, 2);
        auto [id, sort] = atom(e.items[1], {});
        if (sort != Sort::boolean) e.fail("'not' in init applies to boolean fluents");
        builder_.set_initial_value(id, 0.0);
      } else {
        auto [id, sort] = atom(e, {});
        if (sort != Sort::boolean) e.fail("numeric fluents are initialised with (= fluent value)");
        builder_.set_initial_value(id, 1.0);
      }
    }
  }

  void effects(const SExpr& e, const Bindings& b, const Formula& guard, std::vector<ConditionalEffect>& out) const {
    const std::string& h = e.head();
    auto emit = [&](const SExpr& target, Expr value) {
      auto [id, sort] = atom(target, b);
      if (value.sort() != sort) e.fail("effect value does not match the fluent's sort");
      out.push_back({id, guard, std::move(value)});
    };
    auto target_num = [&](const SExpr& target) {
      auto [id, sort] = atom(target, b);
      if (sort != Sort::numeric) target.fail("expected a numeric fluent");
      return Expr::fluent(id, sort);
    };
    if (h == "and") {
      for (std::size_t i = 1; i < e.items.size(); ++i) effects(e.items[i], b, guard, out);
    } else if (h == "when") {
      if (e.items.size() < 3) e.fail("(when <condition> <effect>...)");
      Formula cond = make_and({guard, formula(e.items[1], b)});
      for (std::size_t i = 2; i < e.items.size(); ++i) effects(e.items[i], b, cond, out);
    } else if (h == "forall") {
      expect_size(e, 3);
      std::vector<Param> params = read_params(e.items[1]);
      for_each_binding(params, b, e, [&](const Bindings& inner) { effects(e.items[2], inner, guard, out); });
    } else if (h == "add" || h == "del") {
      expect_size(e, 2);
      emit(e.items[1], Expr::truth(h == "add"));
    } else if (h == "set") {
      expect_size(e, 3);
      auto [id, sort] = atom(e.items[1], b);
      emit(e.items[1], sort == Sort::boolean ? formula(e.items[2], b) : numeric(e.items[2], b));
    } else if (h == "incr" || h == "decr") {
      expect_size(e, 3);
      Expr cur = target_num(e.items[1]);
      Expr delta = numeric(e.items[2], b);
      emit(e.items[1], h == "incr" ? make_add(cur, delta) : make_sub(cur, delta));
    } else {
      e.items[0].fail("unknown effect '" + h + "'");
    }
  }

  void read_action(const SExpr& item) {
    if (item.items.size() < 2 || item.items[1].list) item.fail("(action <name> :params ... :pre ... :effect ... :cost ...)");
    const std::string name = item.items[1].atom;
    const SExpr* params_e = nullptr;
    const SExpr* pre_e = nullptr;
    const SExpr* eff_e = nullptr;
    const SExpr* cost_e = nullptr;
    for (std::size_t i = 2; i < item.items.size(); i += 2) {
      const SExpr& key = item.items[i];
      if (i + 1 >= item.items.size()) key.fail("missing value for action field");
      const SExpr* val = &item.items[i + 1];
      if (key.is(":params")) params_e = val;
      else if (key.is(":pre")) pre_e = val;
      else if (key.is(":effect")) eff_e = val;
      else if (key.is(":cost")) cost_e = val;
      else key.fail("unknown action field");
    }
    std::vector<Param> params = params_e ? read_params(*params_e) : std::vector<Param>{};
    for_each_binding(params, {}, item, [&](const Bindings& b) {
      Action a;
      a.name = name;
      if (!params.empty()) {
        a.name += "(";
        for (std::size_t i = 0; i < params.size(); ++i) {
          if (i) a.name += ",";
          a.name += b.at(params[i].var);
        }
        a.name += ")";
      }
      a.precondition = pre_e ? formula(*pre_e, b) : Expr::truth(true);
      if (a.precondition.is_false()) return;  // statically impossible grounding
      if (eff_e) effects(*eff_e, b, Expr::truth(true), a.effects);
      std::erase_if(a.effects, [](const ConditionalEffect& x) { return x.condition.is_false(); });
      a.cost = cost_e ? numeric(*cost_e, b) : Expr::number(1.0);
      builder_.add_action(std::move(a));
    });
  }

  ValidationOptions options_;
  DomainBuilder builder_;
  std::unordered_map<std::string, std::vector<std::string>> subtypes_;
  std::unordered_map<std::string, std::vector<std::string>> direct_objects_;
  std::unordered_map<std::string, std::string> object_type_;
  std::vector<std::string> object_order_;
  std::unordered_map<std::string, FluentSchema> schemas_;
};

}  // namespace

DomainTheory parse_domain(std::string_view text, const ValidationOptions& options) {
  Reader reader(text);
  SExpr doc = reader.read_document();
  Loader loader(options);
  return loader.load(doc);
}

DomainTheory load_domain(const std::filesystem::path& path, const ValidationOptions& options) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open domain file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_domain(ss.str(), options);
}

}  // namespace dynplan
