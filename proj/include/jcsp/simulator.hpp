#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "jcsp/model.hpp"
#include "jcsp/prng.hpp"
#include "jcsp/solver.hpp"

namespace jcsp {

struct SimOptions {
  std::uint64_t seed = 1;
  double warmup_fraction = 0.2;   // of simulated time
  double max_time = 5000.0;       // seconds per replication
  long max_events = 50'000'000;
  int replications = 10;
  double confidence = 0.95;

  void check() const {
    if (warmup_fraction < 0.0 || warmup_fraction >= 1.0)
      throw std::invalid_argument("sim: warm-up fraction must be in [0,1)");
    if (replications < 1) throw std::invalid_argument("sim: replications >= 1");
    if (!(max_time > 0.0)) throw std::invalid_argument("sim: max_time must be > 0");
  }
};

struct SimEstimate {
  double mean = 0.0;
  double half_width = 0.0;
};

struct SimCacheStat {
  std::string task;
  SimEstimate hit_freq;
  std::vector<double> item_miss_ratio;  // request-weighted, per item
  std::vector<double> occupancy;        // time-averaged cached fraction per item
};

struct SimResult {
  std::vector<std::string> class_names;
  std::vector<SimEstimate> throughput;     // per class
  std::vector<SimEstimate> response_time;  // per class, cycle minus think
  std::map<std::string, SimEstimate> task_residence;  // per server task, per visit
  std::map<std::string, SimEstimate> utilization;     // per processor
  std::vector<SimCacheStat> caches;
  int replications = 1;
  std::uint64_t seed = 0;
};

namespace simdetail {

// 97.5% Student t quantiles for df = 1..30; normal beyond.
inline double t975(int df) {
  static const double tab[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                               2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                               2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                               2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (df < 1) return 12.706;
  if (df <= 30) return tab[df - 1];
  return 1.96;
}

inline SimEstimate combine(const std::vector<double>& xs) {
  SimEstimate e;
  if (xs.empty()) return e;
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / static_cast<double>(xs.size());
  if (xs.size() >= 2) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    e.half_width = t975(static_cast<int>(xs.size()) - 1) * sd /
                   std::sqrt(static_cast<double>(xs.size()));
  }
  return e;
}

// --- execution plan compiled from the activity graph -----------------------

struct Step;
using Plan = std::vector<Step>;

struct Step {
  enum class Kind { Demand, Call, Branch, CacheAccess } kind = Kind::Demand;
  PhaseType dist;                 // Demand
  int processor = -1;             // Demand
  int entry = -1;                 // Call
  bool async = false;             // Call
  std::vector<double> probs;      // Branch
  std::vector<Plan> alts;         // Branch; CacheAccess = {hit, miss}
};

struct EntryPlan {
  int task = -1;
  Plan steps;
  bool item = false;
  std::vector<double> popularity;
};

struct Compiled {
  const LqnModel* model = nullptr;
  std::vector<Processor> procs;
  std::vector<Task> tasks;
  std::map<std::string, int> proc_index, task_index, entry_index;
  std::vector<EntryPlan> entries;
  std::vector<int> reference_tasks;
  std::vector<int> reference_entry;
};

inline Compiled compile(const LqnModel& m) {
  require_valid(m);
  Compiled c;
  c.model = &m;
  c.procs = m.processors;
  c.tasks = m.tasks;
  for (std::size_t i = 0; i < m.processors.size(); ++i) c.proc_index[m.processors[i].id] = static_cast<int>(i);
  for (std::size_t i = 0; i < m.tasks.size(); ++i) c.task_index[m.tasks[i].id] = static_cast<int>(i);
  for (std::size_t i = 0; i < m.entries.size(); ++i) c.entry_index[m.entries[i].id] = static_cast<int>(i);

  std::map<std::string, const PrecedenceEdge*> succ;
  for (const auto& pe : m.precedences)
    if (!pe.from.empty()) succ[pe.from.front()] = &pe;

  auto build = [&](auto&& self, const std::string& act_id, Plan& out) -> void {
    const Activity* a = m.find_activity(act_id);
    if (a->host_demand.mean > 0.0) {
      Step s;
      s.kind = Step::Kind::Demand;
      s.dist = a->host_demand;
      const Task* owner_task = m.find_task(a->owner);
      const Entry* owner_entry = m.find_entry(a->owner);
      std::string task_id = owner_task ? owner_task->id : owner_entry->owner_task;
      s.processor = c.proc_index.at(m.find_task(task_id)->host_processor);
      out.push_back(s);
    }
    for (const auto& cid : a->calls_out) {
      const Call* call = m.find_call(cid);
      Step s;
      s.kind = Step::Kind::Call;
      s.entry = c.entry_index.at(call->to_entry);
      s.async = call->kind == CallKind::Asynchronous;
      // integer mean-call counts are unrolled into repeated steps
      int reps = std::max(1, static_cast<int>(std::lround(call->mean_calls)));
      for (int r = 0; r < reps; ++r) out.push_back(s);
    }
    auto sit = succ.find(act_id);
    if (sit == succ.end()) return;
    const PrecedenceEdge& pe = *sit->second;
    if (pe.kind == PrecedenceKind::Sequence) {
      for (const auto& nxt : pe.to) self(self, nxt, out);
    } else if (pe.kind == PrecedenceKind::OrBranch) {
      Step s;
      s.kind = Step::Kind::Branch;
      s.probs = pe.branch_probabilities;
      for (const auto& nxt : pe.to) {
        Plan alt;
        self(self, nxt, alt);
        s.alts.push_back(std::move(alt));
      }
      out.push_back(s);
    } else {
      Step s;
      s.kind = Step::Kind::CacheAccess;
      Plan hit, miss;
      self(self, pe.to[0], hit);
      self(self, pe.to[1], miss);
      s.alts = {std::move(hit), std::move(miss)};
      out.push_back(s);
    }
  };

  c.entries.resize(m.entries.size());
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const Entry& e = m.entries[i];
    EntryPlan& ep = c.entries[i];
    ep.task = c.task_index.at(e.owner_task);
    ep.item = e.kind == EntryKind::Item;
    build(build, e.bound_activity, ep.steps);
    if (ep.item) {
      const Task& t = m.tasks[static_cast<std::size_t>(ep.task)];
      ep.popularity = e.popularity ? *e.popularity
                                   : t.cache_spec->popularity.expand(t.cache_spec->items);
    }
  }
  for (std::size_t i = 0; i < m.tasks.size(); ++i) {
    if (m.tasks[i].kind != TaskKind::Reference) continue;
    c.reference_tasks.push_back(static_cast<int>(i));
    int entry = -1;
    for (std::size_t ei = 0; ei < m.entries.size(); ++ei)
      if (m.entries[ei].owner_task == m.tasks[i].id) entry = static_cast<int>(ei);
    if (entry < 0) throw ModelError("sim: reference task without entry");
    c.reference_entry.push_back(entry);
  }
  return c;
}

// --- single-replication engine ---------------------------------------------

struct Job;

struct Frame {
  const Plan* steps = nullptr;
  std::size_t pc = 0;
  int entry = -1;       // entry-level frames: index, else -1
  double arrival = 0.0; // for task residence
  bool holds_token = false;
};

struct Job {
  int cls = -1;           // reference class index
  std::vector<Frame> stack;
  double cycle_start = 0.0;
  double think_end = 0.0;
  bool think_done = false;
  bool mark_think_on_resume = false;
  bool zombie = false;    // async fire-and-forget
};

class Engine {
 public:
  Engine(const Compiled& c, const SimOptions& opt, std::uint64_t seed)
      : c_(c), opt_(opt), rng_(seed) {
    procs_.resize(c.procs.size());
    for (std::size_t i = 0; i < c.procs.size(); ++i) {
      procs_[i].is_delay = c.procs[i].scheduling == Scheduling::InfiniteServer;
      procs_[i].servers = c.procs[i].multiplicity;
    }
    tasks_.resize(c.tasks.size());
    for (std::size_t i = 0; i < c.tasks.size(); ++i) {
      tasks_[i].tokens = c.tasks[i].multiplicity;
      if (c.tasks[i].kind == TaskKind::Cache) {
        const auto& cs = *c.tasks[i].cache_spec;
        tasks_[i].cache_capacity = cs.total_capacity();
        tasks_[i].items = cs.items;
        // initialize by sampling m distinct items from the popularity profile
        std::vector<double> pop = cs.popularity.expand(cs.items);
        std::set<int> chosen;
        std::discrete_distribution<int> dd(pop.begin(), pop.end());
        while (static_cast<int>(chosen.size()) < tasks_[i].cache_capacity)
          chosen.insert(dd(rng_));
        tasks_[i].cached.assign(static_cast<std::size_t>(cs.items), false);
        for (int k : chosen) tasks_[i].cached[static_cast<std::size_t>(k)] = true;
        tasks_[i].occupancy_integral.assign(static_cast<std::size_t>(cs.items), 0.0);
        tasks_[i].hits_per_item.assign(static_cast<std::size_t>(cs.items), 0);
        tasks_[i].requests_per_item.assign(static_cast<std::size_t>(cs.items), 0);
        tasks_[i].last_update = 0.0;
      }
    }
  }

  void run() {
    warmup_at_ = opt_.warmup_fraction * opt_.max_time;
    for (std::size_t r = 0; r < c_.reference_tasks.size(); ++r) {
      int users = c_.tasks[static_cast<std::size_t>(c_.reference_tasks[r])].multiplicity;
      for (int u = 0; u < users; ++u) {
        auto job = std::make_shared<Job>();
        job->cls = static_cast<int>(r);
        start_cycle(*job, 0.0);
        jobs_.push_back(job);
        advance(job, 0.0);
      }
    }
    long events = 0;
    while (!events_.empty()) {
      auto ev = events_.top();
      if (ev.time > opt_.max_time) break;
      events_.pop();
      now_ = ev.time;
      ev.fn();
      if (++events > opt_.max_events)
        throw std::runtime_error("sim: event budget exhausted");
    }
    if (events == 0) throw std::runtime_error("sim: no events simulated");
    finalize_stats();
  }

  // --- collected statistics
  std::vector<double> class_completions;   // after warm-up
  std::vector<double> class_response_sum;  // after warm-up
  std::vector<long> class_response_cnt;
  std::map<std::string, std::pair<double, long>> task_residence;  // sum, count
  std::map<std::string, double> proc_busy;                        // utilization integral
  struct CacheCounters {
    long hits = 0, misses = 0;
    std::vector<double> occupancy;  // normalized
    std::vector<double> item_miss_ratio;
  };
  std::map<std::string, CacheCounters> cache_counts;
  double measured_horizon = 0.0;
  long arrivals = 0, departures = 0, in_system_end = 0;

 private:
  struct Event {
    double time;
    std::uint64_t seq;
    std::function<void()> fn;
    bool operator<(const Event& o) const {
      return time != o.time ? time > o.time : seq > o.seq;
    }
  };

  struct PsProc {
    bool is_delay = false;
    int servers = 1;
    double vtime = 0.0, last_t = 0.0, busy_integral = 0.0;
    std::uint64_t epoch = 0;
    std::multimap<double, std::shared_ptr<Job>> active;  // target vtime -> job

    double rate() const {
      std::size_t n = active.size();
      if (n == 0) return 0.0;
      return std::min(1.0, static_cast<double>(servers) / static_cast<double>(n));
    }
    void advance_to(double t) {
      std::size_t n = active.size();
      if (n > 0) {
        vtime += (t - last_t) * rate();
        busy_integral += (t - last_t) *
                         (static_cast<double>(std::min(n, static_cast<std::size_t>(servers))) /
                          static_cast<double>(servers));
      }
      last_t = t;
    }
  };

  struct TaskState {
    int tokens = 1;
    std::deque<std::shared_ptr<Job>> wait_queue;
    // cache tasks
    int cache_capacity = 0, items = 0;
    std::vector<bool> cached;
    std::vector<double> occupancy_integral;
    std::vector<long> hits_per_item, requests_per_item;
    double last_update = 0.0;
  };

  void schedule(double t, std::function<void()> fn) {
    events_.push({t, seq_++, std::move(fn)});
  }

  void start_cycle(Job& job, double t) {
    job.stack.clear();
    Frame f;
    f.steps = &c_.entries[static_cast<std::size_t>(c_.reference_entry[static_cast<std::size_t>(job.cls)])].steps;
    f.pc = 0;
    f.entry = -1;
    f.arrival = t;
    job.stack.push_back(f);
    job.cycle_start = t;
    job.think_done = false;
  }

  void advance(std::shared_ptr<Job> job, double t) {
    if (job->mark_think_on_resume) {
      job->mark_think_on_resume = false;
      job->think_done = true;
      job->think_end = t;
    }
    for (;;) {
      if (job->stack.empty()) {
        // cycle complete
        if (job->zombie) return;  // async job ends
        if (t >= warmup_at_) {
          class_completions[static_cast<std::size_t>(job->cls)] += 1.0;
          if (job->think_done) {
            class_response_sum[static_cast<std::size_t>(job->cls)] += t - job->think_end;
            class_response_cnt[static_cast<std::size_t>(job->cls)] += 1;
          }
        }
        start_cycle(*job, t);
        continue;
      }
      Frame& f = job->stack.back();
      if (f.pc >= f.steps->size()) {
        finish_frame(job, t);
        continue;
      }
      const Step& st = (*f.steps)[f.pc];
      switch (st.kind) {
        case Step::Kind::Demand: {
          ++f.pc;
          double work = st.dist.sample(rng_);
          bool top_level_think = job->stack.size() == 1 && !job->think_done;
          if (work <= 0.0) {
            if (top_level_think) {
              job->think_done = true;
              job->think_end = t;
            }
            continue;
          }
          // response clock starts when the top-level reference think ends
          if (top_level_think) job->mark_think_on_resume = true;
          enqueue_ps(st.processor, job, work, t);
          return;
        }
        case Step::Kind::Call: {
          ++f.pc;
          if (st.async) {
            auto spawn = std::make_shared<Job>();
            spawn->cls = job->cls;
            spawn->zombie = true;
            begin_entry(spawn, st.entry, t);
            jobs_.push_back(spawn);
            continue;
          }
          begin_entry(job, st.entry, t);
          return;  // begin_entry either parked the job or scheduled progress
        }
        case Step::Kind::Branch: {
          ++f.pc;
          std::discrete_distribution<int> dd(st.probs.begin(), st.probs.end());
          int alt = dd(rng_);
          Frame sub;
          sub.steps = &st.alts[static_cast<std::size_t>(alt)];
          sub.pc = 0;
          sub.entry = -1;
          sub.arrival = t;
          job->stack.push_back(sub);
          continue;
        }
        case Step::Kind::CacheAccess: {
          ++f.pc;
          int entry = f.entry;
          // the enclosing entry frame carries the item-entry context
          for (auto it = job->stack.rbegin(); it != job->stack.rend(); ++it)
            if (it->entry >= 0) {
              entry = it->entry;
              break;
            }
          const EntryPlan& ep = c_.entries[static_cast<std::size_t>(entry)];
          TaskState& ts = tasks_[static_cast<std::size_t>(ep.task)];
          std::discrete_distribution<int> dd(ep.popularity.begin(), ep.popularity.end());
          int item = dd(rng_);
          update_cache_occupancy(ep.task, t);
          bool hit = ts.cached[static_cast<std::size_t>(item)];
          if (t >= warmup_at_) {
            ts.requests_per_item[static_cast<std::size_t>(item)] += 1;
            if (hit) ts.hits_per_item[static_cast<std::size_t>(item)] += 1;
          }
          if (!hit) {
            // RR: evict a uniformly random cached item, insert the missed one
            std::vector<int> cached_items;
            for (int k = 0; k < ts.items; ++k)
              if (ts.cached[static_cast<std::size_t>(k)]) cached_items.push_back(k);
            if (static_cast<int>(cached_items.size()) >= ts.cache_capacity &&
                !cached_items.empty()) {
              std::uniform_int_distribution<std::size_t> pick(0, cached_items.size() - 1);
              ts.cached[static_cast<std::size_t>(cached_items[pick(rng_)])] = false;
            }
            ts.cached[static_cast<std::size_t>(item)] = true;
          }
          Frame sub;
          sub.steps = &st.alts[hit ? 0 : 1];
          sub.pc = 0;
          sub.entry = -1;
          sub.arrival = t;
          job->stack.push_back(sub);
          continue;
        }
      }
    }
  }

  void begin_entry(std::shared_ptr<Job> job, int entry, double t) {
    const EntryPlan& ep = c_.entries[static_cast<std::size_t>(entry)];
    TaskState& ts = tasks_[static_cast<std::size_t>(ep.task)];
    Frame f;
    f.steps = &ep.steps;
    f.pc = 0;
    f.entry = entry;
    f.arrival = t;
    ++arrivals;
    if (ts.tokens > 0) {
      --ts.tokens;
      f.holds_token = true;
      job->stack.push_back(f);
      schedule(t, [this, job] { advance(job, now_); });
    } else {
      job->stack.push_back(f);  // frame parked, token pending
      ts.wait_queue.push_back(job);
    }
  }

  void finish_frame(std::shared_ptr<Job> job, double t) {
    Frame f = job->stack.back();
    job->stack.pop_back();
    if (f.entry < 0) return;
    const EntryPlan& ep = c_.entries[static_cast<std::size_t>(f.entry)];
    TaskState& ts = tasks_[static_cast<std::size_t>(ep.task)];
    ++departures;
    if (t >= warmup_at_) {
      auto& agg = task_residence[c_.tasks[static_cast<std::size_t>(ep.task)].id];
      agg.first += t - f.arrival;
      agg.second += 1;
    }
    if (f.holds_token) {
      if (!ts.wait_queue.empty()) {
        auto next = ts.wait_queue.front();
        ts.wait_queue.pop_front();
        next->stack.back().holds_token = true;
        schedule(t, [this, next] { advance(next, now_); });
      } else {
        ++ts.tokens;
      }
    }
  }

  void enqueue_ps(int proc, std::shared_ptr<Job> job, double work, double t) {
    PsProc& p = procs_[static_cast<std::size_t>(proc)];
    if (p.is_delay) {
      schedule(t + work, [this, job] { advance(job, now_); });
      return;
    }
    p.advance_to(t);
    p.active.emplace(p.vtime + work, job);
    reschedule_ps(proc, t);
  }

  void reschedule_ps(int proc, double t) {
    PsProc& p = procs_[static_cast<std::size_t>(proc)];
    ++p.epoch;
    if (p.active.empty()) return;
    double target = p.active.begin()->first;
    double dt = (target - p.vtime) / p.rate();
    std::uint64_t epoch = p.epoch;
    schedule(t + std::max(dt, 0.0), [this, proc, epoch] {
      PsProc& pp = procs_[static_cast<std::size_t>(proc)];
      if (pp.epoch != epoch) return;  // superseded
      pp.advance_to(now_);
      auto it = pp.active.begin();
      auto job = it->second;
      pp.active.erase(it);
      reschedule_ps(proc, now_);
      advance(job, now_);
    });
  }

  void update_cache_occupancy(int task, double t) {
    TaskState& ts = tasks_[static_cast<std::size_t>(task)];
    double from = std::max(ts.last_update, warmup_at_);
    if (t > from)
      for (int k = 0; k < ts.items; ++k)
        if (ts.cached[static_cast<std::size_t>(k)])
          ts.occupancy_integral[static_cast<std::size_t>(k)] += t - from;
    ts.last_update = t;
  }

  void finalize_stats() {
    measured_horizon = opt_.max_time - warmup_at_;
    for (std::size_t i = 0; i < c_.procs.size(); ++i) {
      procs_[i].advance_to(opt_.max_time);
      proc_busy[c_.procs[i].id] = procs_[i].busy_integral / opt_.max_time;
    }
    for (std::size_t i = 0; i < c_.tasks.size(); ++i) {
      if (c_.tasks[i].kind != TaskKind::Cache) continue;
      update_cache_occupancy(static_cast<int>(i), opt_.max_time);
      TaskState& ts = tasks_[i];
      CacheCounters cc;
      for (int k = 0; k < ts.items; ++k) {
        cc.hits += ts.hits_per_item[static_cast<std::size_t>(k)];
        cc.misses += ts.requests_per_item[static_cast<std::size_t>(k)] -
                     ts.hits_per_item[static_cast<std::size_t>(k)];
        cc.occupancy.push_back(ts.occupancy_integral[static_cast<std::size_t>(k)] /
                               measured_horizon);
        long req = ts.requests_per_item[static_cast<std::size_t>(k)];
        cc.item_miss_ratio.push_back(
            req > 0 ? 1.0 - static_cast<double>(ts.hits_per_item[static_cast<std::size_t>(k)]) /
                                static_cast<double>(req)
                    : 0.0);
      }
      cache_counts[c_.tasks[i].id] = cc;
    }
    for (const auto& job : jobs_)
      if (!job->stack.empty()) ++in_system_end;
  }

  const Compiled& c_;
  SimOptions opt_;
  std::mt19937_64 rng_;
  std::priority_queue<Event> events_;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  double warmup_at_ = 0.0;
  std::vector<PsProc> procs_;
  std::vector<TaskState> tasks_;
  std::vector<std::shared_ptr<Job>> jobs_;

 public:
  void init_class_stats(std::size_t classes) {
    class_completions.assign(classes, 0.0);
    class_response_sum.assign(classes, 0.0);
    class_response_cnt.assign(classes, 0);
  }
};

}  // namespace simdetail

inline SimResult simulate(const LqnModel& m, const SimOptions& options = {}) {
  options.check();
  simdetail::Compiled c = simdetail::compile(m);
  const std::size_t C = c.reference_tasks.size();
  if (C == 0) throw ModelError("simulate: no reference task");

  std::vector<std::vector<double>> thr(C), resp(C);
  std::map<std::string, std::vector<double>> task_res, util;
  std::map<std::string, std::vector<double>> hitf;
  std::map<std::string, std::vector<std::vector<double>>> occup, imr;

  for (int rep = 0; rep < options.replications; ++rep) {
    simdetail::Engine eng(c, options, derive_seed(options.seed, static_cast<std::uint64_t>(rep)));
    eng.init_class_stats(C);
    eng.run();
    double horizon = eng.measured_horizon;
    for (std::size_t i = 0; i < C; ++i) {
      thr[i].push_back(eng.class_completions[i] / horizon);
      if (eng.class_response_cnt[i] == 0)
        throw std::runtime_error("simulate: zero completed cycles after warm-up");
      resp[i].push_back(eng.class_response_sum[i] /
                        static_cast<double>(eng.class_response_cnt[i]));
    }
    for (const auto& [task, agg] : eng.task_residence)
      task_res[task].push_back(agg.second > 0 ? agg.first / static_cast<double>(agg.second) : 0.0);
    for (const auto& [proc, u] : eng.proc_busy) util[proc].push_back(u);
    for (const auto& [task, cc] : eng.cache_counts) {
      double total = static_cast<double>(cc.hits + cc.misses);
      hitf[task].push_back(total > 0.0 ? static_cast<double>(cc.hits) / total : 0.0);
      occup[task].push_back(cc.occupancy);
      imr[task].push_back(cc.item_miss_ratio);
    }
  }

  SimResult out;
  out.replications = options.replications;
  out.seed = options.seed;
  for (std::size_t i = 0; i < C; ++i) {
    out.class_names.push_back(c.tasks[static_cast<std::size_t>(c.reference_tasks[i])].id);
    out.throughput.push_back(simdetail::combine(thr[i]));
    out.response_time.push_back(simdetail::combine(resp[i]));
  }
  for (const auto& [task, xs] : task_res) out.task_residence[task] = simdetail::combine(xs);
  for (const auto& [proc, xs] : util) out.utilization[proc] = simdetail::combine(xs);
  for (const auto& [task, xs] : hitf) {
    SimCacheStat stat;
    stat.task = task;
    stat.hit_freq = simdetail::combine(xs);
    const auto& occ_reps = occup[task];
    const auto& imr_reps = imr[task];
    std::size_t items = occ_reps.front().size();
    stat.occupancy.assign(items, 0.0);
    stat.item_miss_ratio.assign(items, 0.0);
    for (std::size_t k = 0; k < items; ++k) {
      for (const auto& o : occ_reps) stat.occupancy[k] += o[k] / occ_reps.size();
      for (const auto& o : imr_reps) stat.item_miss_ratio[k] += o[k] / imr_reps.size();
    }
    out.caches.push_back(stat);
  }
  return out;
}

/// Per-entity comparison of analytical and simulated residence (Fig. 8 style).
struct ComparisonRow {
  std::string entity;
  double analytical = 0.0;
  double simulated = 0.0;
  double half_width = 0.0;
  double abs_diff = 0.0;
  double rel_diff = 0.0;
};

inline std::vector<ComparisonRow> compare_residence(const SolverResult& analytical,
                                                    const SimResult& sim) {
  std::vector<ComparisonRow> rows;
  auto rel = [](double a, double b) {
    double base = std::max(std::abs(b), 1e-12);
    return std::abs(a - b) / base;
  };
  for (std::size_t i = 0; i < analytical.class_names.size(); ++i) {
    bool found = false;
    for (std::size_t j = 0; j < sim.class_names.size(); ++j) {
      if (sim.class_names[j] != analytical.class_names[i]) continue;
      found = true;
      ComparisonRow r;
      r.entity = "class:" + analytical.class_names[i];
      r.analytical = analytical.response_time[i];
      r.simulated = sim.response_time[j].mean;
      r.half_width = sim.response_time[j].half_width;
      r.abs_diff = std::abs(r.analytical - r.simulated);
      r.rel_diff = rel(r.analytical, r.simulated);
      rows.push_back(r);
    }
    if (!found)
      throw std::invalid_argument("compare_residence: class '" + analytical.class_names[i] +
                                  "' missing from simulation");
  }
  // cache-task residence (wait + holding) per visit
  for (const auto& em : analytical.entities) {
    auto it = sim.task_residence.find(em.entity);
    if (it == sim.task_residence.end()) continue;
    ComparisonRow r;
    r.entity = "task:" + em.entity;
    r.analytical = em.residence;
    r.simulated = it->second.mean;
    r.half_width = it->second.half_width;
    r.abs_diff = std::abs(r.analytical - r.simulated);
    r.rel_diff = rel(r.analytical, r.simulated);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace jcsp
