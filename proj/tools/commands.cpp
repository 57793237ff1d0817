// Copyright 2026 The ngtestbed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "commands.hpp"

#include <csignal>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ng/broker.hpp"
#include "ng/fleet.hpp"
#include "ng/harness.hpp"

namespace ng::cli {

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

struct Failure {
  int code;
  std::string message;
};

int report(Env& env, const std::string& cmd, int code, const std::string& msg) {
  *env.err << cmd << ": " << msg << "\n";
  return code;
}

void need_subject(const Env& env) {
  if (env.subject.empty()) throw Failure{kUserError, "NG_SUBJECT is not set"};
  if (!wire::valid_subject(env.subject)) throw Failure{kUserError, "NG_SUBJECT is not a valid subject"};
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

void print_candidates(std::ostream& out, const std::vector<ui::Candidate>& all) {
  std::vector<ui::Candidate> ok, rejected;
  for (const auto& c : all) (c.feasible ? ok : rejected).push_back(c);
  std::stable_sort(ok.begin(), ok.end(), ui::rank_before);
  out << "# rank cluster queue freecpus queuelength verdict reasons\n";
  int rank = 0;
  for (const auto& c : ok)
    out << ++rank << " " << c.cluster << " " << c.queue.name << " " << c.queue.free_cpus << " "
        << c.queue.queue_length << " feasible -\n";
  for (const auto& c : rejected)
    out << "- " << c.cluster << " " << c.queue.name << " " << c.queue.free_cpus << " " << c.queue.queue_length
        << " rejected " << join(c.rejection_reasons, "; ") << "\n";
}

int cmd_ngsub(CLI::App& app, const std::vector<std::string>& args, Env& env) {
  std::string file, giis = env.giis, dir;
  bool dryrun = false;
  app.add_option("xrsl-file", file, "job description")->required();
  app.add_option("--giis", giis, "GIIS to query");
  app.add_flag("--dryrun", dryrun, "print the ranked candidates and submit nothing");
  app.add_option("--dir", dir, "directory holding files to upload (default: next to the job file)");
  std::vector<std::string> rev(args.rbegin(), args.rend());
  app.parse(rev);
  need_subject(env);

  std::string text;
  try {
    text = read_file(file);
  } catch (const std::exception& e) {
    throw Failure{kUserError, e.what()};
  }
  xrsl::JobDescription job = xrsl::parse_job(text);
  ui::Client client(*env.transport, env.subject, giis);
  client.resolve_inputs(job);
  ui::Discovery d = client.discover();
  for (const auto& w : client.warnings()) *env.err << "ngsub: warning: " << w << "\n";
  auto all = ui::evaluate(job, env.subject, d.clusters);
  if (dryrun) {
    print_candidates(*env.out, all);
    return kOk;
  }
  auto ranked = ui::match(job, env.subject, d.clusters);
  if (ranked.empty()) throw Failure{kUserError, "no cluster satisfies the job requirements"};
  fs::path local = dir.empty() ? fs::absolute(file).parent_path() : fs::path(dir);
  *env.out << client.submit(job, ranked.front(), local) << "\n";
  return kOk;
}

int cmd_ngstat(CLI::App& app, const std::vector<std::string>& args, Env& env) {
  std::vector<std::string> ids;
  bool all = false;
  std::string giis = env.giis;
  app.add_option("gridid", ids, "grid job ids");
  app.add_flag("--all", all, "every job of the caller");
  app.add_option("--giis", giis, "GIIS to query");
  std::vector<std::string> rev(args.rbegin(), args.rend());
  app.parse(rev);
  need_subject(env);
  if (ids.empty() && !all) throw Failure{kUserError, "give a gridid or --all"};
  ui::Client client(*env.transport, env.subject, giis);
  if (all) {
    for (const auto& j : client.jobs(env.subject)) *env.out << j.gridid << " " << j.state << "\n";
  }
  for (const auto& id : ids) *env.out << id << " " << client.status(id) << "\n";
  return kOk;
}

int cmd_ngget(CLI::App& app, const std::vector<std::string>& args, Env& env) {
  std::string id, dir, giis = env.giis;
  app.add_option("gridid", id, "grid job id")->required();
  app.add_option("dir", dir, "destination directory")->required();
  app.add_option("--giis", giis, "GIIS to query");
  std::vector<std::string> rev(args.rbegin(), args.rend());
  app.parse(rev);
  need_subject(env);
  ui::Client client(*env.transport, env.subject, giis);
  for (const auto& name : client.fetch_outputs(id, dir)) *env.out << (fs::path(dir) / name).string() << "\n";
  return kOk;
}

int cmd_control(CLI::App& app, const std::vector<std::string>& args, Env& env, bool cancel) {
  std::string id, giis = env.giis;
  app.add_option("gridid", id, "grid job id")->required();
  app.add_option("--giis", giis, "GIIS to query");
  std::vector<std::string> rev(args.rbegin(), args.rend());
  app.parse(rev);
  need_subject(env);
  ui::Client client(*env.transport, env.subject, giis);
  if (cancel)
    client.cancel(id);
  else
    client.clean(id);
  *env.out << id << (cancel ? " cancelled" : " cleaned") << "\n";
  return kOk;
}

int cmd_ngls(CLI::App& app, const std::vector<std::string>& args, Env& env) {
  std::string filter = "(objectclass=nordugrid-cluster)", giis = env.giis;
  app.add_option("--filter", filter, "LDAP-style filter");
  app.add_option("--giis", giis, "GIIS to query");
  std::vector<std::string> rev(args.rbegin(), args.rend());
  app.parse(rev);
  need_subject(env);
  info::Filter f = info::parse_filter(filter);
  ui::Client client(*env.transport, env.subject, giis);
  bool partial = false;
  *env.out << info::serialize_entries(client.query(f, &partial));
  if (partial) *env.err << "ngls: warning: partial answer\n";
  return kOk;
}

int cmd_daemon(CLI::App& app, const std::vector<std::string>& args, Env& env, fleet::Role role) {
  std::string config, name;
  app.add_option("config", config, "fleet configuration file")->required();
  app.add_option("--name", name, "run only the named service");
  std::vector<std::string> rev(args.rbegin(), args.rend());
  app.parse(rev);
  fleet::FleetConfig cfg;
  try {
    cfg = fleet::load_fleet_config(config);
  } catch (const fleet::ConfigError& e) {
    throw Failure{kUserError, e.what()};
  }
  g_stop = false;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGPIPE, SIG_IGN);
  return fleet::run_daemons(cfg, role, name, g_stop, *env.err);
}

int cmd_demo(CLI::App& app, const std::vector<std::string>& args, Env& env) {
  std::string config, dir;
  bool cancel = false, unmasked = false;
  app.add_option("config", config, "fleet configuration (default: built-in demo fleet)");
  app.add_option("--dir", dir, "state directory for the built-in fleet");
  app.add_flag("--cancel", cancel, "cancel the job while it runs");
  app.add_flag("--timing", unmasked, "print logical timestamps");
  std::vector<std::string> rev(args.rbegin(), args.rend());
  app.parse(rev);

  fleet::FleetConfig cfg;
  try {
    if (config.empty()) {
      fs::path d = dir.empty() ? fs::temp_directory_path() / ("ng-demo-" + random_hex(8)) : fs::path(dir);
      cfg = fleet::parse_fleet_config(harness::demo_fleet_config(fs::absolute(d)));
    } else {
      cfg = fleet::load_fleet_config(config);
    }
  } catch (const fleet::ConfigError& e) {
    throw Failure{kUserError, e.what()};
  }
  ManualClock clock;
  fleet::Fleet f(cfg, clock);
  harness::seed_demo_data(f, "the quick brown fox\n");
  harness::TaskflowOptions opt;
  opt.xrsl = harness::demo_job_xrsl(f);
  opt.uploads = harness::demo_uploads();
  if (!env.subject.empty()) opt.subject = env.subject;
  if (cancel) {
    opt.xrsl = "&(executable=\"/bin/sleep\")(arguments=\"30\")(jobname=\"sleeper\")";
    opt.uploads.clear();
    opt.cancel_at = gm::JobState::InlrmsR;
  }
  harness::Transcript t = harness::run_taskflow(f, opt);
  *env.out << t.render(!unmasked);
  std::string why;
  if (!harness::peer_to_peer(t.ledger, &why)) *env.err << "ng-demo: ledger violation: " << why << "\n";
  if (!t.completed()) return report(env, "ng-demo", kRemoteError, "task flow stopped at " + t.failed_step);
  return kOk;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"ngsub",   "ngstat", "ngget", "ngcancel", "ngclean", "ngls",
                                                 "ng-cluster", "ng-se", "ng-rc", "ng-giis", "ng-demo"};
  return names;
}

int run(const std::string& name, const std::vector<std::string>& args, Env& env) {
  CLI::App app{"NorduGrid testbed: " + name, name};
  try {
    if (name == "ngsub") return cmd_ngsub(app, args, env);
    if (name == "ngstat") return cmd_ngstat(app, args, env);
    if (name == "ngget") return cmd_ngget(app, args, env);
    if (name == "ngcancel") return cmd_control(app, args, env, true);
    if (name == "ngclean") return cmd_control(app, args, env, false);
    if (name == "ngls") return cmd_ngls(app, args, env);
    if (name == "ng-cluster") return cmd_daemon(app, args, env, fleet::Role::Cluster);
    if (name == "ng-se") return cmd_daemon(app, args, env, fleet::Role::Se);
    if (name == "ng-rc") return cmd_daemon(app, args, env, fleet::Role::Rc);
    if (name == "ng-giis") return cmd_daemon(app, args, env, fleet::Role::Giis);
    if (name == "ng-demo") return cmd_demo(app, args, env);
    return report(env, "ng", kUserError, "unknown command " + name);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, *env.out, *env.err);
    return code == 0 ? kOk : kUserError;
  } catch (const Failure& f) {
    return report(env, name, f.code, f.message);
  } catch (const ui::UiError& e) {
    return report(env, name, e.remote() ? kRemoteError : kUserError, e.what());
  } catch (const net::TransportError& e) {
    return report(env, name, kRemoteError, e.what());
  } catch (const ParseError& e) {
    return report(env, name, kUserError, e.what());
  } catch (const xrsl::ValidationError& e) {
    return report(env, name, kUserError, e.what());
  } catch (const std::exception& e) {
    return report(env, name, kUserError, e.what());
  }
}

}  // namespace ng::cli
