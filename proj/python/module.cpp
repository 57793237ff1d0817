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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ng/broker.hpp"
#include "ng/fleet.hpp"
#include "ng/harness.hpp"
#include "ng/infomodel.hpp"
#include "ng/wire.hpp"
#include "ng/xrsl.hpp"

namespace py = pybind11;
using namespace ng;

namespace {

py::dict job_dict(const xrsl::JobDescription& j) {
  py::dict d;
  d["executable"] = j.executable;
  d["arguments"] = j.arguments;
  py::list in, out;
  for (const auto& f : j.inputfiles) in.append(py::make_tuple(f.name, f.source));
  for (const auto& f : j.outputfiles) out.append(py::make_tuple(f.name, f.destination));
  d["inputfiles"] = in;
  d["outputfiles"] = out;
  d["cputime"] = j.cputime;
  d["memory"] = j.memory;
  d["disk"] = j.disk;
  d["runtimeenvironment"] = j.runtimeenvironment;
  d["queue"] = j.queue;
  d["stdout"] = j.stdout_file;
  d["stderr"] = j.stderr_file;
  d["jobname"] = j.jobname;
  d["notify"] = j.notify;
  d["lifetime"] = j.lifetime;
  d["action"] = std::string(xrsl::to_string(j.action));
  return d;
}

py::dict headers_dict(const wire::Headers& h) {
  py::dict d;
  for (const auto& [k, v] : h) d[py::str(k)] = v;
  return d;
}

info::Entry make_entry(const std::string& dn, const std::map<std::string, std::vector<std::string>>& attrs) {
  info::Entry e;
  e.dn = dn;
  e.attrs = attrs;
  return e;
}

}  // namespace

PYBIND11_MODULE(_ngtestbed, m) {
  m.doc() = "Bindings for the grid testbed core";

  static py::exception<ParseError> parse_error(m, "ParseError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParseError& e) {
      py::object err = py::reinterpret_borrow<py::object>(parse_error.ptr())(py::str(e.what()));
      err.attr("offset") = e.position();
      PyErr_SetObject(parse_error.ptr(), err.ptr());
    } catch (const Error& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("parse_job", [](const std::string& text) { return job_dict(xrsl::parse_job(text)); }, py::arg("text"));
  m.def("canonical_xrsl", [](const std::string& text) { return xrsl::serialize(xrsl::parse_job(text)); },
        py::arg("text"));

  m.def("canonical_filter", [](const std::string& text) { return info::to_string(info::parse_filter(text)); },
        py::arg("text"));
  m.def(
      "filter_matches",
      [](const std::string& filter, const std::string& dn,
         const std::map<std::string, std::vector<std::string>>& attrs) {
        return info::matches(info::parse_filter(filter), make_entry(dn, attrs));
      },
      py::arg("filter"), py::arg("dn"), py::arg("attrs"));

  m.def(
      "encode_request",
      [](const std::string& verb, const std::string& target,
         const std::vector<std::pair<std::string, std::string>>& headers, const py::bytes& body) {
        auto v = wire::parse_verb(verb);
        if (!v) throw Error("unknown verb " + verb);
        wire::Request r;
        r.verb = *v;
        r.target = target;
        for (const auto& [k, val] : headers) r.headers.set(k, val);
        r.set_body(std::string(body));
        return py::bytes(wire::encode(r));
      },
      py::arg("verb"), py::arg("target"), py::arg("headers"), py::arg("body") = py::bytes());
  m.def(
      "decode",
      [](const py::bytes& raw) {
        auto dec = wire::decode(std::string(raw));
        py::dict d;
        d["consumed"] = dec.consumed;
        if (auto* r = std::get_if<wire::Request>(&dec.message)) {
          d["kind"] = "request";
          d["verb"] = std::string(wire::to_string(r->verb));
          d["target"] = r->target;
          d["headers"] = headers_dict(r->headers);
          d["body"] = py::bytes(r->body);
        } else {
          const auto& s = std::get<wire::Response>(dec.message);
          d["kind"] = "response";
          d["code"] = s.code;
          d["reason"] = s.reason;
          d["headers"] = headers_dict(s.headers);
          d["body"] = py::bytes(s.body);
        }
        return d;
      },
      py::arg("raw"));

  m.def(
      "match",
      [](const std::string& xrsl_text, const std::string& subject, const std::string& entries) {
        auto ranked = ui::match(xrsl::parse_job(xrsl_text), subject, ui::assemble(info::parse_entries(entries)));
        py::list out;
        for (const auto& c : ranked) {
          py::dict d;
          d["cluster"] = c.cluster;
          d["queue"] = c.queue.name;
          d["free_cpus"] = c.queue.free_cpus;
          d["queue_length"] = c.queue.queue_length;
          out.append(d);
        }
        return out;
      },
      py::arg("xrsl"), py::arg("subject"), py::arg("entries"));

  m.def(
      "run_demo",
      [](const std::string& dir, bool cancel) {
        harness::Transcript t;
        {
          py::gil_scoped_release release;
          ManualClock clock;
          fleet::Fleet f(fleet::parse_fleet_config(harness::demo_fleet_config(fs::absolute(dir))), clock);
          harness::seed_demo_data(f, "the quick brown fox\n");
          harness::TaskflowOptions opt;
          opt.xrsl = harness::demo_job_xrsl(f);
          opt.uploads = harness::demo_uploads();
          opt.workdir = fs::absolute(dir) / "ui";
          if (cancel) {
            opt.xrsl = R"(&(executable="/bin/sleep")(arguments="30"))";
            opt.uploads.clear();
            opt.cancel_at = gm::JobState::InlrmsR;
          }
          t = harness::run_taskflow(f, opt);
        }
        py::dict d;
        d["completed"] = t.completed();
        d["final_state"] = t.final_state;
        d["failure"] = t.failure;
        d["transcript"] = t.render(true);
        py::dict downloads;
        for (const auto& [k, v] : t.downloads) downloads[py::str(k)] = py::bytes(v);
        d["downloads"] = downloads;
        d["peer_to_peer"] = harness::peer_to_peer(t.ledger);
        return d;
      },
      py::arg("dir"), py::arg("cancel") = false,
      "Walks one job through a fresh in-process fleet rooted at dir.");
}
