#include "plaway/interp.hpp"

#include <map>

#include "plaway/error.hpp"

namespace plaway {

namespace {

/// Non-local control flow out of a statement list.
struct Flow {
  enum class Kind { Normal, Exit, Continue, Return } kind = Kind::Normal;
  std::optional<std::string> label;
  Value value;
};

class AstInterpreter {
 public:
  AstInterpreter(const FunctionAst& f, QueryOracle& oracle, const RunOptions& options, RunStats& stats)
      : f_(f), options_(options), stats_(stats) {
    ctx_.lookup = [this](const VarRef& v) -> Value {
      auto it = env_.find(v.name);
      if (it == env_.end()) fail(ErrorKind::Undeclared, "undeclared variable " + v.name);
      return it->second;
    };
    ctx_.oracle = &oracle;
    ctx_.queries = &f.queries;
    ctx_.stats = &stats;
  }

  Value run(const std::vector<Value>& args) {
    check_args(f_.params, args);
    for (std::size_t i = 0; i < args.size(); ++i) {
      env_[f_.params[i].name] = args[i];
      types_[f_.params[i].name] = f_.params[i].type;
    }
    for (const auto& d : f_.decls) {
      types_[d.name] = d.type;
      assign(d.name, d.init ? eval(d.init) : Value::null());
    }
    Flow flow = exec_list(f_.body);
    if (flow.kind != Flow::Kind::Return) fail(ErrorKind::Semantic, "function ended without RETURN");
    check_value_type(flow.value, f_.return_type, "result");
    return flow.value;
  }

 private:
  Value eval(const ExprRef& e) { return eval_expr(e, ctx_); }

  void assign(const std::string& name, const Value& v) {
    check_value_type(v, types_.at(name), "value assigned to " + name);
    env_[name] = v;
  }

  void tick() {
    if (++stats_.iterations > options_.iteration_cap)
      fail(ErrorKind::IterationCap, "iteration cap of " + std::to_string(options_.iteration_cap) + " exceeded");
  }

  Flow exec_list(const StmtList& list) {
    for (const auto& s : list) {
      Flow f = exec(s);
      if (f.kind != Flow::Kind::Normal) return f;
    }
    return {};
  }

  /// Whether `flow` (an EXIT or CONTINUE) targets the loop with `label`.
  static bool targets(const Flow& flow, const std::optional<std::string>& label) {
    return !flow.label || (label && *flow.label == *label);
  }

  /// Runs one loop body; returns true if the loop must stop with `out`.
  bool body(const StmtList& list, const std::optional<std::string>& label, Flow& out) {
    Flow f = exec_list(list);
    switch (f.kind) {
      case Flow::Kind::Normal: return false;
      case Flow::Kind::Return: out = f; return true;
      case Flow::Kind::Exit:
        out = targets(f, label) ? Flow{} : f;
        return true;
      case Flow::Kind::Continue:
        if (targets(f, label)) return false;
        out = f;
        return true;
    }
    return false;
  }

  Flow exec(const Stmt& s) {
    return std::visit(
        [&](const auto& n) -> Flow {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, Assign>) {
            assign(n.target, eval(n.value));
            return {};
          } else if constexpr (std::is_same_v<T, If>) {
            return exec_list(truthy(eval(n.cond)) ? n.then_branch : n.else_branch);
          } else if constexpr (std::is_same_v<T, ForRange>) {
            Value lo = eval(n.lo);
            Value hi = eval(n.hi);
            types_[n.var] = TypeTag::Int;
            env_[n.var] = lo;
            Flow out;
            for (;;) {
              if (!truthy(apply_binary(BinOp::Le, env_[n.var], hi))) break;
              tick();
              if (body(n.body, n.label, out)) break;
              env_[n.var] = apply_binary(BinOp::Add, env_[n.var], Value::integer(1));
            }
            env_.erase(n.var);
            return out;
          } else if constexpr (std::is_same_v<T, While>) {
            Flow out;
            while (truthy(eval(n.cond))) {
              tick();
              if (body(n.body, n.label, out)) break;
            }
            return out;
          } else if constexpr (std::is_same_v<T, Loop>) {
            Flow out;
            for (;;) {
              tick();
              if (body(n.body, n.label, out)) break;
            }
            return out;
          } else if constexpr (std::is_same_v<T, Exit>) {
            if (n.cond && !truthy(eval(n.cond))) return {};
            return {Flow::Kind::Exit, n.label, {}};
          } else if constexpr (std::is_same_v<T, Continue>) {
            if (n.cond && !truthy(eval(n.cond))) return {};
            return {Flow::Kind::Continue, n.label, {}};
          } else {
            return {Flow::Kind::Return, std::nullopt, eval(n.value)};
          }
        },
        s.node);
  }

  const FunctionAst& f_;
  const RunOptions& options_;
  RunStats& stats_;
  EvalContext ctx_;
  std::map<std::string, Value> env_;
  std::map<std::string, TypeTag> types_;
};

}  // namespace

Value interpret_ast(const FunctionAst& ast, const std::vector<Value>& args, QueryOracle& oracle,
                    const RunOptions& options, RunStats* stats) {
  RunStats local;
  AstInterpreter interp(ast, oracle, options, stats ? *stats : local);
  return interp.run(args);
}

}  // namespace plaway
