#include "plaway/ssa.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "plaway/error.hpp"

namespace plaway::ssa {

const Block& Program::block(int label) const {
  for (const auto& b : blocks)
    if (b.label == label) return b;
  fail(ErrorKind::Internal, "no block L" + std::to_string(label));
}

std::vector<int> successors(const Terminator& t) {
  std::vector<int> out;
  auto arm = [&](const Arm& a) {
    if (auto g = std::get_if<Goto>(&a)) out.push_back(g->target);
  };
  if (auto g = std::get_if<Goto>(&t)) out.push_back(g->target);
  if (auto c = std::get_if<CondGoto>(&t)) {
    arm(c->then_arm);
    arm(c->else_arm);
  }
  return out;
}

std::map<int, std::vector<int>> predecessors(const Program& p) {
  std::map<int, std::vector<int>> out;
  for (const auto& b : p.blocks) out[b.label];
  for (const auto& b : p.blocks) {
    std::set<int> seen;
    for (int s : successors(b.term))
      if (seen.insert(s).second) out[s].push_back(b.label);
  }
  return out;
}

namespace {

std::vector<int> reverse_postorder(const Program& p) {
  std::vector<int> post;
  std::set<int> seen;
  std::function<void(int)> dfs = [&](int l) {
    if (!seen.insert(l).second) return;
    for (int s : successors(p.block(l).term)) dfs(s);
    post.push_back(l);
  };
  dfs(p.entry);
  std::reverse(post.begin(), post.end());
  return post;
}

}  // namespace

/// Iterative dominators over reverse postorder (Cooper, Harvey, Kennedy).
std::map<int, int> dominators(const Program& p) {
  auto rpo = reverse_postorder(p);
  std::map<int, std::size_t> order;
  for (std::size_t i = 0; i < rpo.size(); ++i) order[rpo[i]] = i;
  auto preds = predecessors(p);
  std::map<int, int> idom;
  idom[p.entry] = p.entry;
  auto intersect = [&](int a, int b) {
    while (a != b) {
      while (order[a] > order[b]) a = idom[a];
      while (order[b] > order[a]) b = idom[b];
    }
    return a;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (int b : rpo) {
      if (b == p.entry) continue;
      std::optional<int> nd;
      for (int q : preds[b]) {
        if (!idom.count(q)) continue;
        nd = nd ? intersect(q, *nd) : q;
      }
      if (nd && (!idom.count(b) || idom[b] != *nd)) {
        idom[b] = *nd;
        changed = true;
      }
    }
  }
  return idom;
}

bool dominates(const std::map<int, int>& idom, int a, int b) {
  for (;;) {
    if (a == b) return true;
    auto it = idom.find(b);
    if (it == idom.end() || it->second == b) return false;
    b = it->second;
  }
}

// ---------------------------------------------------------------------------
// Construction

namespace {

/// On-the-fly SSA construction with sealed blocks; loop headers get eager φs
/// for initialized variables the body assigns.
class Builder {
 public:
  explicit Builder(const FunctionAst& f) : f_(f) {}

  Program build() {
    int entry = new_block(true, {});
    cur_ = entry;
    for (const auto& p : f_.params) {
      scope_[p.name] = p.name;
      types_[p.name] = p.type;
      initialized_.insert(p.name);
      write(p.name, entry, var(p.name));
    }
    for (const auto& d : f_.decls) {
      scope_[d.name] = d.name;
      types_[d.name] = d.type;
      key_order_.push_back(d.name);
      if (d.init) initialized_.insert(d.name);
      ExprRef v = d.init ? lower_expr(d.init) : lit(Value::null());
      emit(d.name, v);
    }
    lower_list(f_.body);
    if (cur_ != -1) fail(ErrorKind::Semantic, "control reaches the end of " + f_.name + " without RETURN");

    Program p;
    p.name = f_.name;
    p.params = f_.params;
    p.return_type = f_.return_type;
    p.queries = f_.queries;
    for (const auto& param : f_.params) {
      p.var_types[param.name] = param.type;
      p.var_bases[param.name] = param.name;
    }
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      Block b;
      b.label = static_cast<int>(i);
      b.phis = blocks_[i].phis;
      b.assigns = blocks_[i].assigns;
      if (!blocks_[i].term) fail(ErrorKind::Internal, "unterminated block L" + std::to_string(i));
      b.term = *blocks_[i].term;
      p.blocks.push_back(std::move(b));
    }
    for (const auto& [name, base] : temp_base_) {
      p.var_bases[name] = base;
      p.var_types[name] = types_.at(base);
    }
    return p;
  }

 private:
  struct BuildBlock {
    std::vector<Phi> phis;
    std::vector<Assign> assigns;
    std::optional<Terminator> term;
    std::vector<int> preds;
    bool sealed = false;
    std::vector<std::pair<std::string, std::size_t>> incomplete;
  };

  struct LoopCtx {
    std::optional<std::string> label;
    int header = -1;
    int exit = -1;
    int latch = -1;
    bool is_for = false;
    std::string key;  ///< FOR variable
    /// Header whose else arm still needs the exit label.
    int patch = -1;
  };

  int new_block(bool sealed, std::vector<int> preds) {
    BuildBlock b;
    b.sealed = sealed;
    b.preds = std::move(preds);
    blocks_.push_back(std::move(b));
    return static_cast<int>(blocks_.size()) - 1;
  }

  std::string new_temp(const std::string& base) {
    std::string name = "%" + std::to_string(temp_base_.size());
    temp_base_[name] = base;
    return name;
  }

  void write(const std::string& key, int block, ExprRef v) { defs_[key][block] = std::move(v); }

  ExprRef read(const std::string& key, int block) {
    auto& m = defs_[key];
    if (auto it = m.find(block); it != m.end()) return it->second;
    return read_recursive(key, block);
  }

  ExprRef read_recursive(const std::string& key, int block) {
    ExprRef v;
    auto& b = blocks_[static_cast<std::size_t>(block)];
    if (!b.sealed) {
      std::size_t idx = add_phi(key, block);
      blocks_[static_cast<std::size_t>(block)].incomplete.push_back({key, idx});
      v = var(blocks_[static_cast<std::size_t>(block)].phis[idx].target);
    } else if (b.preds.size() == 1) {
      v = read(key, b.preds[0]);
    } else if (b.preds.empty()) {
      fail(ErrorKind::Internal, "read of " + key + " before any definition");
    } else {
      std::size_t idx = add_phi(key, block);
      v = var(blocks_[static_cast<std::size_t>(block)].phis[idx].target);
      write(key, block, v);
      add_operands(key, block, idx);
    }
    write(key, block, v);
    return v;
  }

  std::size_t add_phi(const std::string& key, int block) {
    auto& b = blocks_[static_cast<std::size_t>(block)];
    b.phis.push_back({new_temp(base_of(key)), {}});
    return b.phis.size() - 1;
  }

  void add_operands(const std::string& key, int block, std::size_t idx) {
    auto preds = blocks_[static_cast<std::size_t>(block)].preds;
    for (int q : preds) {
      ExprRef v = read(key, q);
      blocks_[static_cast<std::size_t>(block)].phis[idx].args.push_back({q, v});
    }
  }

  void seal(int block) {
    auto pending = std::move(blocks_[static_cast<std::size_t>(block)].incomplete);
    blocks_[static_cast<std::size_t>(block)].incomplete.clear();
    for (const auto& [key, idx] : pending) add_operands(key, block, idx);
    blocks_[static_cast<std::size_t>(block)].sealed = true;
  }

  static std::string base_of(const std::string& key) { return key.substr(0, key.find('#')); }

  void set_term(int block, Terminator t) { blocks_[static_cast<std::size_t>(block)].term = std::move(t); }
  void add_pred(int block, int pred) { blocks_[static_cast<std::size_t>(block)].preds.push_back(pred); }

  void jump(int from, int to) {
    set_term(from, Goto{to});
    add_pred(to, from);
  }

  const std::string& key_of(const std::string& name) const {
    auto it = scope_.find(name);
    if (it == scope_.end()) fail(ErrorKind::Undeclared, "undeclared variable " + name);
    return it->second;
  }

  ExprRef lower_expr(const ExprRef& e) {
    return substitute(e, [&](const VarRef& v) { return read(key_of(v.name), cur_); });
  }

  void emit(const std::string& key, ExprRef value) {
    std::string t = new_temp(base_of(key));
    blocks_[static_cast<std::size_t>(cur_)].assigns.push_back({t, std::move(value)});
    write(key, cur_, var(t));
  }

  void collect_assigned(const StmtList& list, std::set<std::string>& out) const {
    for (const auto& s : list) {
      std::visit(
          [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, plaway::Assign>) {
              out.insert(n.target);
            } else if constexpr (std::is_same_v<T, If>) {
              collect_assigned(n.then_branch, out);
              collect_assigned(n.else_branch, out);
            } else if constexpr (std::is_same_v<T, ForRange> || std::is_same_v<T, While> ||
                                 std::is_same_v<T, Loop>) {
              collect_assigned(n.body, out);
            }
          },
          s.node);
    }
  }

  /// Creates the eager header φs in declaration order, FOR variable last.
  void eager_phis(const StmtList& body, int header, const std::string* for_key) {
    std::set<std::string> assigned;
    collect_assigned(body, assigned);
    for (const auto& p : f_.params)
      if (assigned.count(p.name)) read(p.name, header);
    for (const auto& k : key_order_)
      if (initialized_.count(k) && assigned.count(k) && scope_.count(k) && scope_.at(k) == k) read(k, header);
    if (for_key) read(*for_key, header);
  }

  int ensure_exit(LoopCtx& ctx) {
    if (ctx.exit == -1) {
      ctx.exit = new_block(false, {});
      if (ctx.patch != -1) {
        auto& c = std::get<CondGoto>(*blocks_[static_cast<std::size_t>(ctx.patch)].term);
        c.else_arm = Goto{ctx.exit};
        add_pred(ctx.exit, ctx.patch);
      }
    }
    return ctx.exit;
  }

  LoopCtx& find_loop(const std::optional<std::string>& label, const char* what) {
    for (auto it = loops_.rbegin(); it != loops_.rend(); ++it)
      if (!label || (it->label && *it->label == *label)) return *it;
    fail(ErrorKind::Semantic, std::string(what) + " outside a matching loop");
  }

  void increment(const LoopCtx& ctx) {
    emit(ctx.key, binary(BinOp::Add, read(ctx.key, cur_), lit_int(1)));
    jump(cur_, ctx.header);
  }

  /// Branches to `target` when `cond` holds (always, if empty), else falls through.
  void branch(const ExprRef& cond, int target) {
    if (!cond) {
      jump(cur_, target);
      cur_ = -1;
      return;
    }
    ExprRef c = lower_expr(cond);
    int from = cur_;
    int next = new_block(true, {from});
    set_term(from, CondGoto{c, Goto{target}, Goto{next}});
    add_pred(target, from);
    cur_ = next;
  }

  void lower_list(const StmtList& list) {
    for (const auto& s : list) {
      if (cur_ == -1) return;
      lower(s);
    }
  }

  static const Return* single_return(const StmtList& list) {
    if (list.size() != 1) return nullptr;
    return std::get_if<Return>(&list[0].node);
  }

  void lower_if(const If& n) {
    ExprRef c = lower_expr(n.cond);
    int start = cur_;
    std::optional<int> join;
    auto get_join = [&] {
      if (!join) join = new_block(false, {});
      return *join;
    };
    const Return* tr = single_return(n.then_branch);
    const Return* er = single_return(n.else_branch);
    bool then_block = !tr && (!n.then_branch.empty() || n.else_branch.empty());
    bool else_block = !er && !n.else_branch.empty();

    Arm then_arm = Goto{-1}, else_arm = Goto{-1};
    int tb = -1, eb = -1;
    if (tr) {
      then_arm = Ret{lower_expr(tr->value)};
    } else if (then_block) {
      tb = new_block(true, {start});
      then_arm = Goto{tb};
    }
    if (er) {
      else_arm = Ret{lower_expr(er->value)};
    } else if (else_block) {
      eb = new_block(true, {start});
      else_arm = Goto{eb};
    }
    if (!tr && !then_block) {
      then_arm = Goto{get_join()};
      add_pred(*join, start);
    }
    if (!er && !else_block) {
      else_arm = Goto{get_join()};
      add_pred(*join, start);
    }
    set_term(start, CondGoto{c, then_arm, else_arm});

    for (auto [blk, list] : {std::pair{tb, &n.then_branch}, std::pair{eb, &n.else_branch}}) {
      if (blk == -1) continue;
      cur_ = blk;
      lower_list(*list);
      if (cur_ != -1) jump(cur_, get_join());
    }
    if (join) {
      seal(*join);
      cur_ = *join;
    } else {
      cur_ = -1;
    }
  }

  void lower_for(const ForRange& n) {
    ExprRef lo = lower_expr(n.lo);
    ExprRef hi = lower_expr(n.hi);
    std::string key = n.var + "#" + std::to_string(++for_counter_);
    auto saved = scope_;
    scope_[n.var] = key;
    types_[key] = TypeTag::Int;
    types_[n.var] = TypeTag::Int;
    emit(key, lo);
    if (!is_atom(hi)) {
      std::string t = new_temp(n.var + "_hi");
      types_[n.var + "_hi"] = TypeTag::Int;
      blocks_[static_cast<std::size_t>(cur_)].assigns.push_back({t, hi});
      hi = var(t);
    }
    int pre = cur_;
    int header = new_block(false, {});
    jump(pre, header);
    LoopCtx ctx{n.label, header, -1, -1, true, key, header};
    eager_phis(n.body, header, &key);
    cur_ = header;
    ExprRef test = binary(BinOp::Le, read(key, header), hi);
    int body = new_block(true, {header});
    set_term(header, CondGoto{test, Goto{body}, Goto{-1}});
    loops_.push_back(ctx);
    cur_ = body;
    lower_list(n.body);
    ctx = loops_.back();
    loops_.pop_back();
    if (cur_ != -1) {
      if (ctx.latch != -1)
        jump(cur_, ctx.latch);
      else
        increment(ctx);
    }
    if (ctx.latch != -1) {
      seal(ctx.latch);
      cur_ = ctx.latch;
      increment(ctx);
    }
    seal(header);
    int exit = ensure_exit(ctx);
    seal(exit);
    cur_ = exit;
    scope_ = saved;
  }

  void lower_while(const While& n) {
    int pre = cur_;
    int header = new_block(false, {});
    jump(pre, header);
    eager_phis(n.body, header, nullptr);
    cur_ = header;
    ExprRef c = lower_expr(n.cond);
    int body = new_block(true, {header});
    set_term(header, CondGoto{c, Goto{body}, Goto{-1}});
    loops_.push_back(LoopCtx{n.label, header, -1, -1, false, {}, header});
    cur_ = body;
    lower_list(n.body);
    LoopCtx ctx = loops_.back();
    loops_.pop_back();
    if (cur_ != -1) jump(cur_, header);
    seal(header);
    int exit = ensure_exit(ctx);
    seal(exit);
    cur_ = exit;
  }

  void lower_loop(const Loop& n) {
    int pre = cur_;
    int header = new_block(false, {});
    jump(pre, header);
    eager_phis(n.body, header, nullptr);
    loops_.push_back(LoopCtx{n.label, header, -1, -1, false, {}, -1});
    cur_ = header;
    lower_list(n.body);
    LoopCtx ctx = loops_.back();
    loops_.pop_back();
    if (cur_ != -1) jump(cur_, header);
    seal(header);
    if (ctx.exit != -1) {
      seal(ctx.exit);
      cur_ = ctx.exit;
    } else {
      cur_ = -1;
    }
  }

  void lower(const Stmt& s) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, plaway::Assign>) {
            emit(key_of(n.target), lower_expr(n.value));
          } else if constexpr (std::is_same_v<T, If>) {
            lower_if(n);
          } else if constexpr (std::is_same_v<T, ForRange>) {
            lower_for(n);
          } else if constexpr (std::is_same_v<T, While>) {
            lower_while(n);
          } else if constexpr (std::is_same_v<T, Loop>) {
            lower_loop(n);
          } else if constexpr (std::is_same_v<T, Exit>) {
            LoopCtx& ctx = find_loop(n.label, "EXIT");
            branch(n.cond, ensure_exit(ctx));
          } else if constexpr (std::is_same_v<T, Continue>) {
            LoopCtx& ctx = find_loop(n.label, "CONTINUE");
            int target = ctx.header;
            if (ctx.is_for) {
              if (ctx.latch == -1) ctx.latch = new_block(false, {});
              target = ctx.latch;
            }
            branch(n.cond, target);
          } else {
            set_term(cur_, Ret{lower_expr(n.value)});
            cur_ = -1;
          }
        },
        s.node);
  }

  const FunctionAst& f_;
  std::vector<BuildBlock> blocks_;
  int cur_ = -1;
  int for_counter_ = 0;
  std::map<std::string, std::map<int, ExprRef>> defs_;
  std::map<std::string, std::string> scope_;
  std::map<std::string, TypeTag> types_;
  std::set<std::string> initialized_;
  std::vector<std::string> key_order_;
  std::map<std::string, std::string> temp_base_;
  std::vector<LoopCtx> loops_;
};

// ---------------------------------------------------------------------------
// Rewriting helpers

void rewrite_exprs(Program& p, const std::function<ExprRef(const ExprRef&)>& f) {
  auto arm = [&](Arm& a) {
    if (auto r = std::get_if<Ret>(&a)) r->value = f(r->value);
  };
  for (auto& b : p.blocks) {
    for (auto& phi : b.phis)
      for (auto& a : phi.args) a.value = f(a.value);
    for (auto& a : b.assigns) a.value = f(a.value);
    std::visit(
        [&](auto& t) {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, Ret>) {
            t.value = f(t.value);
          } else if constexpr (std::is_same_v<T, CondGoto>) {
            t.cond = f(t.cond);
            arm(t.then_arm);
            arm(t.else_arm);
          }
        },
        b.term);
  }
}

void retarget(Terminator& t, int from, int to) {
  auto arm = [&](Arm& a) {
    if (auto g = std::get_if<Goto>(&a); g && g->target == from) g->target = to;
  };
  if (auto g = std::get_if<Goto>(&t); g && g->target == from) g->target = to;
  if (auto c = std::get_if<CondGoto>(&t)) {
    arm(c->then_arm);
    arm(c->else_arm);
  }
}

Block* find_block(Program& p, int label) {
  for (auto& b : p.blocks)
    if (b.label == label) return &b;
  return nullptr;
}

/// Propagates atom assignments and removes trivial φs.
bool propagate(Program& p) {
  std::map<std::string, ExprRef> subst;
  for (auto& b : p.blocks) {
    std::erase_if(b.assigns, [&](const Assign& a) {
      if (!is_atom(a.value)) return false;
      subst[a.target] = a.value;
      return true;
    });
    std::erase_if(b.phis, [&](const Phi& phi) {
      std::optional<ExprRef> same;
      for (const auto& a : phi.args) {
        if (auto v = as<VarRef>(a.value); v && v->name == phi.target) continue;
        if (!is_atom(a.value)) return false;
        if (same && !(**same == *a.value)) return false;
        same = a.value;
      }
      if (!same) return false;
      subst[phi.target] = *same;
      return true;
    });
  }
  if (subst.empty()) return false;
  std::function<ExprRef(const std::string&, int)> resolve = [&](const std::string& n, int depth) -> ExprRef {
    auto it = subst.find(n);
    if (it == subst.end() || depth > 1000) return {};
    if (auto v = as<VarRef>(it->second)) {
      if (ExprRef deeper = resolve(v->name, depth + 1)) return deeper;
    }
    return it->second;
  };
  rewrite_exprs(p, [&](const ExprRef& e) {
    return substitute(e, [&](const VarRef& v) -> ExprRef { return resolve(v.name, 0); });
  });
  for (const auto& [n, _] : subst) {
    p.var_types.erase(n);
    p.var_bases.erase(n);
  }
  return true;
}

bool remove_unreachable(Program& p) {
  std::set<int> live;
  std::vector<int> work{p.entry};
  while (!work.empty()) {
    int l = work.back();
    work.pop_back();
    if (!live.insert(l).second) continue;
    for (int s : successors(p.block(l).term)) work.push_back(s);
  }
  if (live.size() == p.blocks.size()) return false;
  std::erase_if(p.blocks, [&](const Block& b) { return !live.count(b.label); });
  for (auto& b : p.blocks)
    for (auto& phi : b.phis) std::erase_if(phi.args, [&](const PhiArg& a) { return !live.count(a.pred); });
  return true;
}

/// Replaces jumps to a bare `return e` block with the return itself.
bool thread_returns(Program& p) {
  bool changed = false;
  for (const auto& r : std::vector<Block>(p.blocks)) {
    if (r.label == p.entry || !r.phis.empty() || !r.assigns.empty()) continue;
    auto ret = std::get_if<Ret>(&r.term);
    if (!ret) continue;
    for (auto& b : p.blocks) {
      if (b.label == r.label) continue;
      if (auto g = std::get_if<Goto>(&b.term); g && g->target == r.label) {
        b.term = *ret;
        changed = true;
      } else if (auto c = std::get_if<CondGoto>(&b.term)) {
        for (Arm* a : {&c->then_arm, &c->else_arm}) {
          if (auto ga = std::get_if<Goto>(a); ga && ga->target == r.label) {
            *a = *ret;
            changed = true;
          }
        }
      }
    }
  }
  return changed;
}

/// Bypasses blocks that only jump on; keeps the entry block.
bool thread_forwarders(Program& p) {
  bool changed = false;
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    Block f = p.blocks[i];
    if (f.label == p.entry || !f.phis.empty() || !f.assigns.empty()) continue;
    auto g = std::get_if<Goto>(&f.term);
    if (!g || g->target == f.label) continue;
    int t = g->target;
    auto preds = predecessors(p)[f.label];
    for (int q : preds) {
      Block* qb = find_block(p, q);
      auto succ = successors(qb->term);
      if (std::find(succ.begin(), succ.end(), t) != succ.end()) continue;
      if (q == f.label) continue;
      retarget(qb->term, f.label, t);
      Block* tb = find_block(p, t);
      for (auto& phi : tb->phis) {
        for (const auto& a : std::vector<PhiArg>(phi.args))
          if (a.pred == f.label) phi.args.push_back({q, a.value});
      }
      changed = true;
    }
    if (changed) {
      // Drop φ args for the forwarder if nothing reaches it any more.
      if (predecessors(p)[f.label].empty()) {
        Block* tb = find_block(p, t);
        for (auto& phi : tb->phis) std::erase_if(phi.args, [&](const PhiArg& a) { return a.pred == f.label; });
      }
      return true;
    }
  }
  return changed;
}

void renumber(Program& p) {
  std::map<int, int> m;
  for (std::size_t i = 0; i < p.blocks.size(); ++i) m[p.blocks[i].label] = static_cast<int>(i);
  auto arm = [&](Arm& a) {
    if (auto g = std::get_if<Goto>(&a)) g->target = m.at(g->target);
  };
  for (auto& b : p.blocks) {
    b.label = m.at(b.label);
    for (auto& phi : b.phis)
      for (auto& a : phi.args) a.pred = m.at(a.pred);
    if (auto g = std::get_if<Goto>(&b.term)) g->target = m.at(g->target);
    if (auto c = std::get_if<CondGoto>(&b.term)) {
      arm(c->then_arm);
      arm(c->else_arm);
    }
  }
  p.entry = m.at(p.entry);
}

const std::set<std::string>& reserved_names() {
  static const std::set<std::string> names{"fn", "result", "run", "iter", "r", "call"};
  return names;
}

}  // namespace

Program lower_to_ssa(const FunctionAst& ast) { return name_variables(Builder(ast).build()); }

Program name_variables(const Program& in) {
  Program p = in;
  std::vector<std::string> order;
  for (const auto& b : p.blocks) {
    for (const auto& phi : b.phis) order.push_back(phi.target);
    for (const auto& a : b.assigns) order.push_back(a.target);
  }
  std::map<std::string, int> count;
  for (const auto& n : order) ++count[p.var_bases.at(n)];

  std::set<std::string> used;
  std::set<std::string> sources;
  for (const auto& param : p.params) {
    used.insert(param.name);
    sources.insert(param.name);
  }
  for (const auto& [_, base] : p.var_bases) sources.insert(base);

  std::map<std::string, int> next;
  std::map<std::string, std::string> rename;
  for (const auto& n : order) {
    const std::string& base = p.var_bases.at(n);
    std::string name = count[base] == 1 ? base : base + "_" + std::to_string(++next[base]);
    bool own = count[base] == 1;
    while (used.count(name) || reserved_names().count(name) || (!own && sources.count(name))) name += "_";
    used.insert(name);
    rename[n] = name;
  }
  auto ren = [&](const std::string& n) {
    auto it = rename.find(n);
    return it == rename.end() ? n : it->second;
  };
  rewrite_exprs(p, [&](const ExprRef& e) {
    return substitute(e, [&](const VarRef& v) -> ExprRef {
      auto it = rename.find(v.name);
      return it == rename.end() ? ExprRef{} : var(it->second, v.qualified);
    });
  });
  for (auto& b : p.blocks) {
    for (auto& phi : b.phis) phi.target = ren(phi.target);
    for (auto& a : b.assigns) a.target = ren(a.target);
  }
  std::map<std::string, TypeTag> types;
  std::map<std::string, std::string> bases;
  for (const auto& [n, t] : p.var_types) types[ren(n)] = t;
  for (const auto& [n, b] : p.var_bases) bases[ren(n)] = b;
  p.var_types = std::move(types);
  p.var_bases = std::move(bases);
  return p;
}

Program simplify_ssa(const Program& in) {
  Program p = in;
  for (bool changed = true; changed;) {
    changed = false;
    while (propagate(p)) changed = true;
    if (remove_unreachable(p)) changed = true;
    if (thread_returns(p)) changed = true;
    if (remove_unreachable(p)) changed = true;
    if (thread_forwarders(p)) changed = true;
    if (remove_unreachable(p)) changed = true;
  }
  renumber(p);
  return name_variables(p);
}

// ---------------------------------------------------------------------------
// Verification

std::vector<std::string> verify(const Program& p) {
  std::vector<std::string> out;
  struct Def {
    int block;
    int index;  ///< -1 for φs, -2 for parameters
  };
  std::map<std::string, Def> defs;
  std::set<int> labels;
  for (const auto& b : p.blocks)
    if (!labels.insert(b.label).second) out.push_back("duplicate label L" + std::to_string(b.label));
  for (const auto& param : p.params) defs[param.name] = {p.entry, -2};
  auto define = [&](const std::string& n, Def d) {
    if (!defs.emplace(n, d).second) out.push_back(n + " is assigned more than once");
  };
  for (const auto& b : p.blocks) {
    for (const auto& phi : b.phis) define(phi.target, {b.label, -1});
    for (std::size_t i = 0; i < b.assigns.size(); ++i) define(b.assigns[i].target, {b.label, static_cast<int>(i)});
  }
  for (const auto& b : p.blocks)
    for (int s : successors(b.term))
      if (!labels.count(s)) out.push_back("L" + std::to_string(b.label) + " jumps to missing L" + std::to_string(s));
  if (!out.empty()) return out;

  auto idom = dominators(p);
  auto preds = predecessors(p);
  /// Whether the definition of `n` is available at position `index` of `block`.
  auto available = [&](const std::string& n, int block, int index) {
    auto it = defs.find(n);
    if (it == defs.end()) return false;
    const Def& d = it->second;
    if (d.index == -2) return true;
    if (d.block == block) return d.index < index;
    return dominates(idom, d.block, block);
  };
  auto check = [&](const ExprRef& e, int block, int index, const std::string& where) {
    for_each_var(e, [&](const VarRef& v) {
      if (!available(v.name, block, index))
        out.push_back("use of " + v.name + " in " + where + " is not dominated by its definition");
    });
  };
  const int end = 1 << 30;
  for (const auto& b : p.blocks) {
    std::string at = "L" + std::to_string(b.label);
    if (b.label == p.entry && !b.phis.empty()) out.push_back("entry block has φs");
    const auto& ps = preds[b.label];
    for (const auto& phi : b.phis) {
      std::multiset<int> got;
      for (const auto& a : phi.args) {
        got.insert(a.pred);
        check(a.value, a.pred, end, "φ " + phi.target);
      }
      if (got != std::multiset<int>(ps.begin(), ps.end()))
        out.push_back("φ " + phi.target + " in " + at + " does not match the predecessors");
    }
    for (std::size_t i = 0; i < b.assigns.size(); ++i)
      check(b.assigns[i].value, b.label, static_cast<int>(i), at);
    std::visit(
        [&](const auto& t) {
          using T = std::decay_t<decltype(t)>;
          auto arm = [&](const Arm& a) {
            if (auto r = std::get_if<Ret>(&a)) check(r->value, b.label, end, at);
          };
          if constexpr (std::is_same_v<T, Ret>) {
            check(t.value, b.label, end, at);
          } else if constexpr (std::is_same_v<T, CondGoto>) {
            check(t.cond, b.label, end, at);
            arm(t.then_arm);
            arm(t.else_arm);
          }
        },
        b.term);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interpretation

Value interpret_ssa(const Program& p, const std::vector<Value>& args, QueryOracle& oracle,
                    const RunOptions& options, RunStats* stats) {
  RunStats local;
  RunStats& st = stats ? *stats : local;
  check_args(p.params, args);
  std::map<std::string, Value> env;
  for (std::size_t i = 0; i < args.size(); ++i) env[p.params[i].name] = args[i];
  std::map<int, const Block*> by_label;
  for (const auto& b : p.blocks) by_label[b.label] = &b;

  EvalContext ctx;
  ctx.lookup = [&](const VarRef& v) -> Value {
    auto it = env.find(v.name);
    if (it == env.end()) fail(ErrorKind::Internal, "SSA variable " + v.name + " read before definition");
    return it->second;
  };
  ctx.oracle = &oracle;
  ctx.queries = &p.queries;
  ctx.stats = &st;

  auto set = [&](const std::string& n, Value v) {
    if (auto it = p.var_types.find(n); it != p.var_types.end())
      check_value_type(v, it->second, "value assigned to " + n);
    env[n] = std::move(v);
  };
  auto finish = [&](const ExprRef& e) {
    Value v = eval_expr(e, ctx);
    check_value_type(v, p.return_type, "result");
    return v;
  };

  int prev = -1, cur = p.entry;
  for (;;) {
    const Block& b = *by_label.at(cur);
    if (!b.phis.empty()) {
      std::vector<Value> vals;
      for (const auto& phi : b.phis) {
        auto it = std::find_if(phi.args.begin(), phi.args.end(), [&](const PhiArg& a) { return a.pred == prev; });
        if (it == phi.args.end()) fail(ErrorKind::Internal, "φ " + phi.target + " has no value for L" + std::to_string(prev));
        vals.push_back(eval_expr(it->value, ctx));
      }
      for (std::size_t i = 0; i < vals.size(); ++i) set(b.phis[i].target, vals[i]);
    }
    for (const auto& a : b.assigns) set(a.target, eval_expr(a.value, ctx));

    std::optional<int> next;
    const Arm* taken = nullptr;
    if (auto g = std::get_if<Goto>(&b.term)) {
      next = g->target;
    } else if (auto c = std::get_if<CondGoto>(&b.term)) {
      taken = truthy(eval_expr(c->cond, ctx)) ? &c->then_arm : &c->else_arm;
    } else {
      return finish(std::get<Ret>(b.term).value);
    }
    if (taken) {
      if (auto r = std::get_if<Ret>(taken)) return finish(r->value);
      next = std::get<Goto>(*taken).target;
    }
    if (++st.jumps > options.iteration_cap)
      fail(ErrorKind::IterationCap, "iteration cap of " + std::to_string(options.iteration_cap) + " exceeded");
    prev = cur;
    cur = *next;
  }
}

// ---------------------------------------------------------------------------
// Printing

std::string print_ir_expr(const ExprRef& e) { return print_expr(e); }

std::string dump(const Program& p) {
  std::ostringstream os;
  os << "function " << p.name << "(";
  for (std::size_t i = 0; i < p.params.size(); ++i) os << (i ? ", " : "") << p.params[i].name;
  os << ")\n{\n";
  auto label = [](int l) { return "L" + std::to_string(l); };
  auto arm = [&](const Arm& a) {
    if (auto g = std::get_if<Goto>(&a)) return "goto " + label(g->target);
    return "return " + print_ir_expr(std::get<Ret>(a).value);
  };
  for (std::size_t bi = 0; bi < p.blocks.size(); ++bi) {
    const Block& b = p.blocks[bi];
    if (bi) os << "\n";
    std::string head = "  " + label(b.label) + ": ";
    std::string pad(head.size(), ' ');
    bool first = true;
    auto line = [&](const std::string& s) {
      os << (first ? head : pad) << s << "\n";
      first = false;
    };
    for (const auto& phi : b.phis) {
      std::string s = phi.target + " ← φ(";
      for (std::size_t i = 0; i < phi.args.size(); ++i)
        s += (i ? ", " : "") + label(phi.args[i].pred) + ": " + print_ir_expr(phi.args[i].value);
      line(s + ");");
    }
    for (const auto& a : b.assigns) line(a.target + " ← " + print_ir_expr(a.value) + ";");
    if (auto g = std::get_if<Goto>(&b.term)) {
      line("goto " + label(g->target) + ";");
    } else if (auto r = std::get_if<Ret>(&b.term)) {
      line("return " + print_ir_expr(r->value) + ";");
    } else {
      const auto& c = std::get<CondGoto>(b.term);
      line("if " + print_ir_expr(c.cond) + " then");
      line("  " + arm(c.then_arm));
      line("else " + arm(c.else_arm) + ";");
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace plaway::ssa
