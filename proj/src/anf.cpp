#include "plaway/anf.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "plaway/error.hpp"

namespace plaway::anf {

namespace {

TermRef term(Term t) { return TermRef(std::move(t)); }

std::string fn_name(int label) { return "L" + std::to_string(label); }

class Converter {
 public:
  explicit Converter(const ssa::Program& p) : p_(p) {
    for (const auto& b : p.blocks) {
      blocks_[b.label] = &b;
      for (int s : ssa::successors(b.term)) ++in_edges_[s];
    }
    preds_ = ssa::predecessors(p);
    idom_ = ssa::dominators(p);
    for (const auto& b : p.blocks)
      for (int s : ssa::successors(b.term))
        if (ssa::dominates(idom_, s, b.label)) headers_.insert(s);
    for (const auto& param : p.params) top_params_.insert(param.name);
    int pos = 0;
    for (const auto& b : p.blocks) {
      for (const auto& phi : b.phis) def_order_[phi.target] = pos++;
      for (const auto& a : b.assigns) def_order_[a.target] = pos++;
    }
  }

  Program run() {
    for (const auto& b : p_.blocks)
      if (is_function(b.label)) function_labels_.push_back(b.label);
    for (const auto& b : p_.blocks) collect_region(b.label);
    lift();

    Program out;
    out.name = p_.name;
    out.params = p_.params;
    out.return_type = p_.return_type;
    out.var_types = p_.var_types;
    out.queries = p_.queries;
    out.body = with_letrec(p_.entry, block_term(p_.entry));
    return out;
  }

 private:
  bool is_function(int l) const {
    if (l == p_.entry) return false;
    auto it = in_edges_.find(l);
    int edges = it == in_edges_.end() ? 0 : it->second;
    if (edges >= 2 || headers_.count(l)) return true;
    const auto& ps = preds_.at(l);
    return ps.size() == 1 && headers_.count(ps[0]);
  }

  /// Function (or entry) whose body contains block `l`.
  int owner(int l) const {
    if (l == p_.entry || is_function(l)) return l;
    const auto& ps = preds_.at(l);
    if (ps.size() != 1) fail(ErrorKind::Internal, "inlined block L" + std::to_string(l) + " has several predecessors");
    return owner(ps[0]);
  }

  void collect_region(int l) {
    int o = owner(l);
    const ssa::Block& b = *blocks_.at(l);
    auto& defs = defs_[o];
    auto& uses = uses_[o];
    auto use = [&](const ExprRef& e) {
      for_each_var(e, [&](const VarRef& v) { uses.insert(v.name); });
    };
    if (l != o)
      for (const auto& phi : b.phis) {
        defs.insert(phi.target);
        for (const auto& a : phi.args) use(a.value);
      }
    else
      for (const auto& phi : b.phis) defs.insert(phi.target);
    for (const auto& a : b.assigns) {
      defs.insert(a.target);
      use(a.value);
    }
    auto arm = [&](const ssa::Arm& a) {
      if (auto r = std::get_if<ssa::Ret>(&a)) use(r->value);
    };
    std::visit(
        [&](const auto& t) {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, ssa::Ret>) {
            use(t.value);
          } else if constexpr (std::is_same_v<T, ssa::CondGoto>) {
            use(t.cond);
            arm(t.then_arm);
            arm(t.else_arm);
          }
        },
        b.term);
    for (int s : ssa::successors(b.term)) {
      if (!is_function(s)) continue;
      calls_[o].insert(s);
      for (const auto& phi : blocks_.at(s)->phis)
        for (const auto& a : phi.args)
          if (a.pred == l) use(a.value);
    }
  }

  void lift() {
    for (bool changed = true; changed;) {
      changed = false;
      for (int f : function_labels_) {
        std::set<std::string> want = uses_[f];
        for (int g : calls_[f]) want.insert(lifted_[g].begin(), lifted_[g].end());
        std::set<std::string> next;
        for (const auto& v : want)
          if (!defs_[f].count(v) && !top_params_.count(v)) next.insert(v);
        if (next != lifted_[f]) {
          lifted_[f] = std::move(next);
          changed = true;
        }
      }
    }
    for (int f : function_labels_) {
      std::vector<std::string> vs(lifted_[f].begin(), lifted_[f].end());
      std::sort(vs.begin(), vs.end(), [&](const std::string& a, const std::string& b) {
        return def_order_.at(a) < def_order_.at(b);
      });
      lifted_order_[f] = std::move(vs);
    }
  }

  TermRef with_letrec(int owner_label, TermRef body) {
    std::vector<Function> fs;
    for (int f : function_labels_) {
      auto it = idom_.find(f);
      if (it == idom_.end() || owner(it->second) != owner_label) continue;
      Function fn;
      fn.name = fn_name(f);
      fn.label = f;
      for (const auto& phi : blocks_.at(f)->phis) fn.params.push_back(phi.target);
      for (const auto& v : lifted_order_[f]) fn.params.push_back(v);
      fn.body = with_letrec(f, block_term(f));
      fs.push_back(std::move(fn));
    }
    if (fs.empty()) return body;
    return term({LetRec{std::move(fs), std::move(body)}});
  }

  TermRef jump(int from, int to) {
    const ssa::Block& t = *blocks_.at(to);
    auto phi_arg = [&](const ssa::Phi& phi) -> ExprRef {
      for (const auto& a : phi.args)
        if (a.pred == from) return a.value;
      fail(ErrorKind::Internal, "φ " + phi.target + " lacks an argument for L" + std::to_string(from));
    };
    if (is_function(to)) {
      TailCall c{fn_name(to), {}};
      for (const auto& phi : t.phis) c.args.push_back(phi_arg(phi));
      for (const auto& v : lifted_order_[to]) c.args.push_back(var(v));
      return term({std::move(c)});
    }
    TermRef body = block_term(to);
    for (auto it = t.phis.rbegin(); it != t.phis.rend(); ++it) body = term({Let{it->target, phi_arg(*it), body}});
    return body;
  }

  TermRef block_term(int l) {
    const ssa::Block& b = *blocks_.at(l);
    auto arm = [&](const ssa::Arm& a) -> TermRef {
      if (auto r = std::get_if<ssa::Ret>(&a)) return term({Result{r->value}});
      return jump(l, std::get<ssa::Goto>(a).target);
    };
    TermRef body = std::visit(
        [&](const auto& t) -> TermRef {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, ssa::Goto>) {
            return jump(l, t.target);
          } else if constexpr (std::is_same_v<T, ssa::CondGoto>) {
            return term({If{t.cond, arm(t.then_arm), arm(t.else_arm)}});
          } else {
            return term({Result{t.value}});
          }
        },
        b.term);
    for (auto it = b.assigns.rbegin(); it != b.assigns.rend(); ++it) body = term({Let{it->target, it->value, body}});
    return body;
  }

  const ssa::Program& p_;
  std::map<int, const ssa::Block*> blocks_;
  std::map<int, int> in_edges_;
  std::map<int, std::vector<int>> preds_;
  std::map<int, int> idom_;
  std::set<int> headers_;
  std::set<std::string> top_params_;
  std::map<std::string, int> def_order_;
  std::vector<int> function_labels_;
  std::map<int, std::set<std::string>> defs_, uses_, lifted_;
  std::map<int, std::set<int>> calls_;
  std::map<int, std::vector<std::string>> lifted_order_;
};

void collect_functions(const TermRef& t, std::vector<const Function*>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Let>) {
          collect_functions(n.body, out);
        } else if constexpr (std::is_same_v<T, LetRec>) {
          for (const auto& f : n.functions) out.push_back(&f);
          for (const auto& f : n.functions) collect_functions(f.body, out);
          collect_functions(n.body, out);
        } else if constexpr (std::is_same_v<T, If>) {
          collect_functions(n.then_branch, out);
          collect_functions(n.else_branch, out);
        }
      },
      t->node);
}

}  // namespace

Program from_ssa(const ssa::Program& p) { return Converter(p).run(); }

bool entry_is_trivial(const Program& p) {
  const Term* t = p.body.get();
  while (auto r = std::get_if<LetRec>(&t->node)) t = r->body.get();
  auto c = std::get_if<TailCall>(&t->node);
  return c && std::all_of(c->args.begin(), c->args.end(), [](const ExprRef& a) { return is_atom(a); });
}

std::vector<const Function*> functions(const Program& p) {
  std::vector<const Function*> out;
  collect_functions(p.body, out);
  return out;
}

std::vector<std::string> check_tail_positions(const Program& p) {
  std::vector<std::string> out;
  std::map<std::string, const Function*> fs;
  for (const Function* f : functions(p)) fs[f->name] = f;
  auto scan = [&](const ExprRef& e, const std::string& where) {
    std::function<void(const ExprRef&)> walk = [&](const ExprRef& x) {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Call>) {
              if (fs.count(n.name)) out.push_back("call to " + n.name + " in " + where + " is not in tail position");
              for (const auto& a : n.args) walk(a);
            } else if constexpr (std::is_same_v<T, Binary>) {
              walk(n.lhs);
              walk(n.rhs);
            } else if constexpr (std::is_same_v<T, Unary> || std::is_same_v<T, Cast>) {
              walk(n.arg);
            } else if constexpr (std::is_same_v<T, Query>) {
              for (const auto& a : n.args) walk(a);
            }
          },
          x->node);
    };
    walk(e);
  };
  std::function<void(const TermRef&)> visit = [&](const TermRef& t) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Let>) {
            scan(n.value, "let " + n.var);
            visit(n.body);
          } else if constexpr (std::is_same_v<T, LetRec>) {
            for (const auto& f : n.functions) visit(f.body);
            visit(n.body);
          } else if constexpr (std::is_same_v<T, If>) {
            scan(n.cond, "a condition");
            visit(n.then_branch);
            visit(n.else_branch);
          } else if constexpr (std::is_same_v<T, TailCall>) {
            for (const auto& a : n.args) scan(a, "an argument of " + n.function);
            auto it = fs.find(n.function);
            if (it == fs.end())
              out.push_back("call to unknown function " + n.function);
            else if (it->second->params.size() != n.args.size())
              out.push_back("call to " + n.function + " passes " + std::to_string(n.args.size()) + " arguments for " +
                            std::to_string(it->second->params.size()) + " parameters");
          } else {
            scan(n.value, "a result");
          }
        },
        t->node);
  };
  visit(p.body);
  return out;
}

Value interpret_anf(const Program& p, const std::vector<Value>& args, QueryOracle& oracle,
                    const RunOptions& options, RunStats* stats) {
  RunStats local;
  RunStats& st = stats ? *stats : local;
  check_args(p.params, args);
  std::map<std::string, const Function*> fs;
  for (const Function* f : functions(p)) fs[f->name] = f;

  std::map<std::string, Value> top, env;
  for (std::size_t i = 0; i < args.size(); ++i) top[p.params[i].name] = args[i];
  env = top;

  EvalContext ctx;
  ctx.lookup = [&](const VarRef& v) -> Value {
    auto it = env.find(v.name);
    if (it == env.end()) fail(ErrorKind::Internal, "ANF variable " + v.name + " is not in scope");
    return it->second;
  };
  ctx.oracle = &oracle;
  ctx.queries = &p.queries;
  ctx.stats = &st;

  auto bind = [&](std::map<std::string, Value>& into, const std::string& n, Value v) {
    if (auto it = p.var_types.find(n); it != p.var_types.end()) check_value_type(v, it->second, "value bound to " + n);
    into[n] = std::move(v);
  };

  st.max_depth = 1;
  if (!entry_is_trivial(p)) st.activations = 1;
  TermRef t = p.body;
  for (;;) {
    const Term& cur = *t;
    if (auto l = std::get_if<Let>(&cur.node)) {
      bind(env, l->var, eval_expr(l->value, ctx));
      t = l->body;
    } else if (auto r = std::get_if<LetRec>(&cur.node)) {
      t = r->body;
    } else if (auto i = std::get_if<If>(&cur.node)) {
      t = truthy(eval_expr(i->cond, ctx)) ? i->then_branch : i->else_branch;
    } else if (auto c = std::get_if<TailCall>(&cur.node)) {
      auto it = fs.find(c->function);
      if (it == fs.end()) fail(ErrorKind::Internal, "call to unknown function " + c->function);
      const Function& f = *it->second;
      if (f.params.size() != c->args.size()) fail(ErrorKind::Internal, "arity mismatch calling " + f.name);
      std::vector<Value> vals;
      for (const auto& a : c->args) vals.push_back(eval_expr(a, ctx));
      if (++st.tail_calls > options.iteration_cap)
        fail(ErrorKind::IterationCap, "iteration cap of " + std::to_string(options.iteration_cap) + " exceeded");
      ++st.activations;
      std::map<std::string, Value> next = top;
      for (std::size_t k = 0; k < vals.size(); ++k) bind(next, f.params[k], vals[k]);
      env = std::move(next);
      t = f.body;
    } else {
      Value v = eval_expr(std::get<Result>(cur.node).value, ctx);
      check_value_type(v, p.return_type, "result");
      return v;
    }
  }
}

namespace {

class Printer {
 public:
  std::string run(const Program& p) {
    os_ << "function " << p.name << "(";
    for (std::size_t i = 0; i < p.params.size(); ++i) os_ << (i ? ", " : "") << p.params[i].name;
    os_ << ") =\n";
    print(p.body, 2);
    return os_.str();
  }

 private:
  static std::string args(const std::vector<std::string>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + xs[i];
    return s;
  }

  void line(int indent, const std::string& s) { os_ << std::string(static_cast<std::size_t>(indent), ' ') << s << "\n"; }

  /// Single-line rendering of leaves, used for `else` on one line.
  static std::optional<std::string> leaf(const TermRef& t) {
    if (auto r = std::get_if<Result>(&t->node)) return ssa::print_ir_expr(r->value);
    if (auto c = std::get_if<TailCall>(&t->node)) {
      std::vector<std::string> xs;
      for (const auto& a : c->args) xs.push_back(ssa::print_ir_expr(a));
      return c->function + "(" + args(xs) + ")";
    }
    return std::nullopt;
  }

  void print(const TermRef& t, int in) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Let>) {
            line(in, "let " + n.var + " = " + ssa::print_ir_expr(n.value));
            line(in, "in");
            print(n.body, in + 2);
          } else if constexpr (std::is_same_v<T, LetRec>) {
            for (const auto& f : n.functions) {
              line(in, "letrec " + f.name + "(" + args(f.params) + ") =");
              print(f.body, in + 2);
            }
            line(in, "in");
            print(n.body, in + 2);
          } else if constexpr (std::is_same_v<T, If>) {
            line(in, "if " + ssa::print_ir_expr(n.cond) + " then");
            print(n.then_branch, in + 2);
            if (auto l = leaf(n.else_branch)) {
              line(in, "else " + *l);
            } else {
              line(in, "else");
              print(n.else_branch, in + 2);
            }
          } else {
            line(in, *leaf(term({n})));
          }
        },
        t->node);
  }

  std::ostringstream os_;
};

}  // namespace

std::string dump(const Program& p) { return Printer().run(p); }

}  // namespace plaway::anf
