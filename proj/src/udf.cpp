#include "plaway/udf.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "plaway/error.hpp"

namespace plaway::udf {

std::size_t Udf::slot_index(const std::string& n) const {
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (slots[i].name == n) return i;
  return std::string::npos;
}

namespace {

UExprRef uexpr(UExpr e) { return UExprRef(std::move(e)); }

const anf::TermRef& strip_letrec(const anf::TermRef& t) {
  if (auto r = std::get_if<anf::LetRec>(&t->node)) return strip_letrec(r->body);
  return t;
}

/// Variables read anywhere in `t`, optionally descending into letrec functions.
void term_vars(const anf::TermRef& t, bool into_functions, std::set<std::string>& out) {
  auto use = [&](const ExprRef& e) {
    for_each_var(e, [&](const VarRef& v) { out.insert(v.name); });
  };
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, anf::Let>) {
          use(n.value);
          term_vars(n.body, into_functions, out);
        } else if constexpr (std::is_same_v<T, anf::LetRec>) {
          if (into_functions)
            for (const auto& f : n.functions) term_vars(f.body, into_functions, out);
          term_vars(n.body, into_functions, out);
        } else if constexpr (std::is_same_v<T, anf::If>) {
          use(n.cond);
          term_vars(n.then_branch, into_functions, out);
          term_vars(n.else_branch, into_functions, out);
        } else if constexpr (std::is_same_v<T, anf::TailCall>) {
          for (const auto& a : n.args) use(a);
        } else {
          use(n.value);
        }
      },
      t->node);
}

const std::set<std::string>& reserved() {
  static const std::set<std::string> names{"fn", "result", "run", "iter", "r", "call"};
  return names;
}

class Defunctionalizer {
 public:
  explicit Defunctionalizer(const anf::Program& p) : p_(p) {}

  Udf run() {
    for (const auto& param : p_.params)
      if (reserved().count(param.name))
        fail(ErrorKind::Unsupported, "parameter name " + param.name + " is reserved by the SQL translation");
    auto fs = anf::functions(p_);
    bool trivial = anf::entry_is_trivial(p_);

    Udf u;
    u.name = p_.name;
    u.worker_name = p_.name + "*";
    u.params = p_.params;
    u.return_type = p_.return_type;
    u.queries = p_.queries;
    u.var_types = p_.var_types;
    for (const auto& param : p_.params) u.var_types[param.name] = param.type;

    if (!trivial) u.targets.push_back(0);
    for (const auto* f : fs) {
      u.targets.push_back(f->label);
      labels_[f->name] = f;
    }
    u.has_fn = u.targets.size() > 1;

    std::set<std::string> seen;
    auto add = [&](const std::string& n) {
      if (!seen.insert(n).second) return;
      auto it = u.var_types.find(n);
      if (it == u.var_types.end()) fail(ErrorKind::Internal, "no type for slot " + n);
      u.slots.push_back({n, it->second});
    };
    for (const auto* f : fs)
      for (const auto& n : f->params) add(n);
    std::set<std::string> inner;
    for (const auto* f : fs) term_vars(f->body, true, inner);
    if (!trivial) term_vars(p_.body, false, inner);
    for (const auto& param : p_.params)
      if (inner.count(param.name)) add(param.name);
    slots_ = &u.slots;

    const anf::TermRef& top = strip_letrec(p_.body);
    if (trivial) {
      const auto& c = std::get<anf::TailCall>(top->node);
      const anf::Function* callee = labels_.at(c.function);
      u.initial_call.target = callee->label;
      for (const auto& s : u.slots) {
        auto it = std::find(callee->params.begin(), callee->params.end(), s.name);
        if (it != callee->params.end())
          u.initial_call.args.push_back(c.args[static_cast<std::size_t>(it - callee->params.begin())]);
        else if (is_param(s.name))
          u.initial_call.args.push_back(var(s.name));
        else
          u.initial_call.args.push_back(lit(Value::null()));
      }
    } else {
      u.initial_call.target = 0;
      for (const auto& s : u.slots) u.initial_call.args.push_back(is_param(s.name) ? var(s.name) : lit(Value::null()));
    }

    std::vector<std::pair<int, UExprRef>> bodies;
    if (!trivial) bodies.push_back({0, convert(top)});
    for (const auto* f : fs) bodies.push_back({f->label, convert(f->body)});
    if (!u.has_fn) {
      u.body = bodies.at(0).second;
    } else {
      Case c;
      for (auto& [label, body] : bodies)
        c.arms.push_back({binary(BinOp::Eq, var("fn"), lit_int(label)), body, label});
      u.body = uexpr({std::move(c)});
    }
    return u;
  }

 private:
  bool is_param(const std::string& n) const {
    return std::any_of(p_.params.begin(), p_.params.end(), [&](const Param& q) { return q.name == n; });
  }

  UExprRef convert(const anf::TermRef& t) {
    return std::visit(
        [&](const auto& n) -> UExprRef {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, anf::Let>) {
            LetChain chain;
            const anf::TermRef* cur = &t;
            while (auto l = std::get_if<anf::Let>(&(*cur)->node)) {
              chain.bindings.push_back({l->var, l->value});
              cur = &l->body;
            }
            chain.body = convert(*cur);
            return uexpr({std::move(chain)});
          } else if constexpr (std::is_same_v<T, anf::LetRec>) {
            return convert(n.body);
          } else if constexpr (std::is_same_v<T, anf::If>) {
            Case c;
            c.arms.push_back({n.cond, convert(n.then_branch), -1});
            c.otherwise = convert(n.else_branch);
            return uexpr({std::move(c)});
          } else if constexpr (std::is_same_v<T, anf::TailCall>) {
            const anf::Function* callee = labels_.at(n.function);
            RecCall rc;
            rc.target = callee->label;
            for (const auto& s : *slots_) {
              auto it = std::find(callee->params.begin(), callee->params.end(), s.name);
              if (it != callee->params.end())
                rc.args.push_back(n.args[static_cast<std::size_t>(it - callee->params.begin())]);
              else
                rc.args.push_back(var(s.name, true));
            }
            return uexpr({std::move(rc)});
          } else {
            return uexpr({BaseCase{n.value}});
          }
        },
        t->node);
  }

  const anf::Program& p_;
  std::map<std::string, const anf::Function*> labels_;
  const std::vector<Slot>* slots_ = nullptr;
};

class Stepper {
 public:
  Stepper(const Udf& u, int fn, const std::vector<Value>& slots, const EvalContext& base)
      : u_(u), fn_(fn), slots_(slots), ctx_(base) {
    ctx_.lookup = [this](const VarRef& v) { return lookup(v); };
  }

  Step eval(const UExprRef& e) {
    return std::visit(
        [&](const auto& n) -> Step {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Case>) {
            for (const auto& arm : n.arms)
              if (truthy(eval_expr(arm.guard, ctx_))) return eval(arm.body);
            if (!n.otherwise) fail(ErrorKind::Internal, "no dispatch arm for fn = " + std::to_string(fn_));
            return eval(n.otherwise);
          } else if constexpr (std::is_same_v<T, LetChain>) {
            std::size_t mark = lets_.size();
            for (const auto& b : n.bindings) {
              Value v = eval_expr(b.value, ctx_);
              if (auto it = u_.var_types.find(b.var); it != u_.var_types.end())
                check_value_type(v, it->second, "value bound to " + b.var);
              lets_.push_back({b.var, std::move(v)});
            }
            Step s = eval(n.body);
            lets_.resize(mark);
            return s;
          } else if constexpr (std::is_same_v<T, RecCall>) {
            return call(n.target, n.args);
          } else if constexpr (std::is_same_v<T, BaseCase>) {
            return Step{false, 0, {}, eval_expr(n.value, ctx_)};
          } else {
            if (n.call) return call(n.target, n.args);
            return Step{false, 0, {}, eval_expr(n.result, ctx_)};
          }
        },
        e->node);
  }

 private:
  Step call(int target, const std::vector<ExprRef>& args) {
    if (args.size() != u_.slots.size()) fail(ErrorKind::Internal, "recursive call does not fill every slot");
    Step s{true, target, {}, Value::null()};
    for (const auto& a : args) s.args.push_back(eval_expr(a, ctx_));
    return s;
  }

  Value lookup(const VarRef& v) const {
    if (!v.qualified)
      for (auto it = lets_.rbegin(); it != lets_.rend(); ++it)
        if (it->first == v.name) return it->second;
    if (u_.has_fn && v.name == "fn") return Value::integer(fn_);
    std::size_t i = u_.slot_index(v.name);
    if (i == std::string::npos) fail(ErrorKind::Internal, "worker variable " + v.name + " is not bound");
    return slots_[i];
  }

  const Udf& u_;
  int fn_;
  const std::vector<Value>& slots_;
  EvalContext ctx_;
  std::vector<std::pair<std::string, Value>> lets_;
};

}  // namespace

Udf defunctionalize(const anf::Program& p) { return Defunctionalizer(p).run(); }

Step evaluate_step(const Udf& u, const UExprRef& body, int fn, const std::vector<Value>& slots,
                   const EvalContext& base) {
  return Stepper(u, fn, slots, base).eval(body);
}

std::vector<Value> initial_slots(const Udf& u, const std::vector<Value>& args, const EvalContext& base) {
  EvalContext ctx = base;
  ctx.lookup = [&](const VarRef& v) -> Value {
    for (std::size_t i = 0; i < u.params.size(); ++i)
      if (u.params[i].name == v.name) return args.at(i);
    fail(ErrorKind::Internal, "wrapper variable " + v.name + " is not a parameter");
  };
  std::vector<Value> out;
  for (std::size_t i = 0; i < u.initial_call.args.size(); ++i) {
    Value v = eval_expr(u.initial_call.args[i], ctx);
    check_value_type(v, u.slots[i].type, "argument " + u.slots[i].name);
    out.push_back(std::move(v));
  }
  return out;
}

Value interpret_udf(const Udf& u, const std::vector<Value>& args, QueryOracle& oracle, const RunOptions& options,
                    RunStats* stats) {
  RunStats local;
  RunStats& st = stats ? *stats : local;
  check_args(u.params, args);
  EvalContext base;
  base.oracle = &oracle;
  base.queries = &u.queries;
  base.stats = &st;

  std::vector<Value> slots = initial_slots(u, args, base);
  int fn = u.initial_call.target;
  st.activations = 1;
  st.max_depth = 1;
  for (;;) {
    Step s = evaluate_step(u, u.body, fn, slots, base);
    if (!s.call) {
      check_value_type(s.result, u.return_type, "result");
      return s.result;
    }
    if (++st.tail_calls > options.iteration_cap)
      fail(ErrorKind::IterationCap, "iteration cap of " + std::to_string(options.iteration_cap) + " exceeded");
    ++st.activations;
    for (std::size_t i = 0; i < s.args.size(); ++i)
      check_value_type(s.args[i], u.slots[i].type, "argument " + u.slots[i].name);
    fn = s.target;
    slots = std::move(s.args);
  }
}

// ---------------------------------------------------------------------------
// Layout

namespace {

std::vector<std::string> indent(const std::vector<std::string>& lines, std::size_t n) {
  std::vector<std::string> out;
  for (const auto& l : lines) out.push_back(std::string(n, ' ') + l);
  return out;
}

void append(std::vector<std::string>& out, const std::vector<std::string>& more) {
  out.insert(out.end(), more.begin(), more.end());
}

}  // namespace

std::vector<std::string> render_expr(const UExprRef& e, const RenderHooks& hooks, int& alias,
                                     std::vector<std::string> lets) {
  std::vector<std::string> out;
  if (auto c = std::get_if<Case>(&e->node)) {
    out.push_back("CASE");
    for (const auto& arm : c->arms) {
      std::string guard = arm.label >= 0 ? hooks.guard(arm.label) : hooks.expr(arm.guard, lets);
      out.push_back("  WHEN " + guard + " THEN");
      append(out, indent(render_expr(arm.body, hooks, alias, lets), 7));
    }
    if (c->otherwise) {
      auto body = render_expr(c->otherwise, hooks, alias, lets);
      if (body.size() == 1) {
        out.push_back("  ELSE " + body[0]);
      } else {
        out.push_back("  ELSE");
        append(out, indent(body, 7));
      }
    }
    out.push_back("END");
    return out;
  }
  if (auto ch = std::get_if<LetChain>(&e->node)) {
    std::vector<std::string> joins;
    std::size_t n = ch->bindings.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& b = ch->bindings[i];
      joins.push_back("  (SELECT " + hooks.expr(b.value, lets) + ") AS _" + std::to_string(alias++) + "(" + b.var + ")");
      lets.push_back(b.var);
      if (n == 1) break;
      if (i == 0)
        joins.push_back("    LEFT JOIN LATERAL");
      else if (i + 1 < n)
        joins.push_back("    ON true LEFT JOIN LATERAL");
      else
        joins.push_back("    ON true");
    }
    joins.back() += ")";
    out.push_back("(SELECT");
    append(out, indent(render_expr(ch->body, hooks, alias, lets), 3));
    out.push_back(" FROM");
    append(out, joins);
    return out;
  }
  return hooks.leaf(*e, lets);
}

std::string dump(const Udf& u) {
  auto type = [](TypeTag t) { return std::string(type_name(t)); };
  PrintHooks ph;
  ph.var = [](const VarRef& v) { return v.name; };
  auto expr = [&](const ExprRef& x) { return print_expr(x, ph); };
  auto call_text = [&](int target, const std::vector<ExprRef>& args) {
    std::string s = u.worker_name + "(";
    bool first = true;
    if (u.has_fn) {
      s += "L" + std::to_string(target);
      first = false;
    }
    for (const auto& a : args) {
      s += (first ? "" : ", ") + expr(a);
      first = false;
    }
    return s + ")";
  };

  std::ostringstream os;
  os << "CREATE FUNCTION " << u.name << "(";
  for (std::size_t i = 0; i < u.params.size(); ++i)
    os << (i ? ", " : "") << u.params[i].name << " " << type(u.params[i].type);
  os << ")\nRETURNS " << type(u.return_type) << " AS\n";
  os << "  SELECT " << call_text(u.initial_call.target, u.initial_call.args) << ";\n\n";

  os << "CREATE FUNCTION " << u.worker_name << "(\n  ";
  bool first = true;
  if (u.has_fn) {
    os << "fn int";
    first = false;
  }
  for (const auto& s : u.slots) {
    os << (first ? "" : ", ") << s.name << " " << type(s.type);
    first = false;
  }
  os << ")\nRETURNS " << type(u.return_type) << " AS\n  SELECT\n";

  RenderHooks hooks;
  hooks.expr = [&](const ExprRef& x, const std::vector<std::string>&) { return expr(x); };
  hooks.guard = [](int label) { return "fn = L" + std::to_string(label); };
  hooks.leaf = [&](const UExpr& leaf, const std::vector<std::string>&) -> std::vector<std::string> {
    if (auto rc = std::get_if<RecCall>(&leaf.node)) return {call_text(rc->target, rc->args)};
    if (auto bc = std::get_if<BaseCase>(&leaf.node)) return {expr(bc->value)};
    const auto& row = std::get<RowLeaf>(leaf.node);
    if (!row.call) return {"ROW(false, NULL, " + expr(row.result) + ")"};
    return {"ROW(true, " + call_text(row.target, row.args) + ", NULL)"};
  };
  int alias = 0;
  auto lines = render_expr(u.body, hooks, alias);
  for (std::size_t i = 0; i < lines.size(); ++i)
    os << "    " << lines[i] << (i + 1 == lines.size() ? ";\n" : "\n");
  return os.str();
}

}  // namespace plaway::udf
