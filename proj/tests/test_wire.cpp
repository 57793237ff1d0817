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

#include <gtest/gtest.h>

#include "generators.hpp"
#include "ng/transport.hpp"
#include "ng/wire.hpp"
#include "support.hpp"

using namespace ng;
using wire::Verb;

TEST(Wire, EncodesRequestWithoutBody) {
  wire::Request r{Verb::Lookup, "/rc/lfn1", {{"Subject", "/O=Grid/CN=A"}}, ""};
  EXPECT_EQ(wire::encode(r), "NGP/1 LOOKUP /rc/lfn1\nSubject: /O=Grid/CN=A\n\n");
}

TEST(Wire, EncodesResponseWithBody) {
  wire::Response r{200, "OK", {{"Content-Length", "2"}}, "hi"};
  EXPECT_EQ(wire::encode(r), "NGP/1 200 OK\nContent-Length: 2\n\nhi");
}

TEST(Wire, LineFeedInHeaderValueIsAnEncodingError) {
  wire::Request r{Verb::Query, "/mds", {{"Subject", "/O=Grid/CN=A\nX: y"}}, ""};
  EXPECT_THROW(wire::encode(r), wire::EncodingError);
}

TEST(Wire, RequestWithoutSubjectIsRejected) {
  EXPECT_THROW(wire::decode("NGP/1 GET /x\n\n"), wire::ProtocolError);
}

TEST(Wire, UnknownVerbIsAProtocolError) {
  EXPECT_THROW(wire::decode("NGP/1 HELLO /x\n\n"), wire::ProtocolError);
}

TEST(Wire, ProtocolErrorsArePositioned) {
  try {
    wire::decode("NGP/1 HELLO /x\n\n");
    FAIL();
  } catch (const wire::ProtocolError& e) {
    EXPECT_EQ(e.position(), 7u);  // first byte of the verb
  }
}

TEST(Wire, DecodeReportsConsumedBytes) {
  std::string a = wire::encode(wire::make_response(200, "OK", "abc"));
  std::string b = wire::encode(wire::make_response(404, "Not Found", ""));
  auto d = wire::decode(a + b);
  EXPECT_EQ(d.consumed, a.size());
  EXPECT_EQ(std::get<wire::Response>(d.message).body, "abc");
}

TEST(Wire, HeaderNamesAreCaseInsensitive) {
  wire::Headers h{{"Content-Length", "3"}};
  EXPECT_EQ(h.get("content-length"), "3");
  h.set("CONTENT-LENGTH", "4");
  EXPECT_EQ(h.size(), 1u);
  EXPECT_EQ(h.get("Content-Length"), "4");
}

TEST(Wire, Authorize) {
  std::vector<std::string> a{"/O=Grid/CN=A"};
  std::vector<std::string> star{"/O=Grid/*"};
  EXPECT_TRUE(wire::authorize("/O=Grid/CN=A", a));
  EXPECT_FALSE(wire::authorize("/O=Grid/CN=B", a));
  EXPECT_TRUE(wire::authorize("/O=Grid/CN=Anna", star));
  EXPECT_FALSE(wire::authorize("/O=Other/CN=Anna", star));
  EXPECT_FALSE(wire::authorize("/O=Grid/CN=A", {}));
}

TEST(WireProperty, RoundTripRequestsAndResponses) {
  gen::Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    auto req = gen::request(rng);
    EXPECT_EQ(wire::decode_request(wire::encode(req)), req);
    auto resp = gen::response(rng);
    EXPECT_EQ(wire::decode_response(wire::encode(resp)), resp);
  }
}

TEST(WireProperty, EveryTruncationIsRejected) {
  gen::Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    std::string full = wire::encode(gen::request(rng));
    for (std::size_t n = 0; n < full.size(); ++n) {
      EXPECT_THROW(wire::decode(std::string_view(full).substr(0, n)), wire::ProtocolError) << n;
      // a partial buffer is "need more" or an error, never a frame
      try {
        EXPECT_FALSE(wire::frame_length(std::string_view(full).substr(0, n)).has_value() &&
                     *wire::frame_length(std::string_view(full).substr(0, n)) <= n);
      } catch (const wire::ProtocolError&) {
      }
    }
  }
}

TEST(WireProperty, MutatedBytesParseOrFailWithPosition) {
  gen::Rng rng(13);
  for (int i = 0; i < 3000; ++i) {
    std::string bytes = gen::mutate(rng, wire::encode(gen::request(rng)));
    try {
      auto d = wire::decode(bytes);
      EXPECT_LE(d.consumed, bytes.size());
    } catch (const wire::ProtocolError& e) {
      EXPECT_GE(e.position(), 1u);
      EXPECT_LE(e.position(), bytes.size() + 1);
    }
  }
}

namespace {

struct Echo : net::Service {
  wire::Response handle(const wire::Request& req) override {
    auto r = wire::make_response(200, "OK", req.body);
    r.headers.set("Target", req.target);
    return r;
  }
};

}  // namespace

TEST(WireTcp, RoundTripAndMalformedInput) {
  Echo echo;
  net::TcpServer server(echo, "127.0.0.1", 0);
  server.start();
  std::string ep = "127.0.0.1:" + std::to_string(server.port());

  net::TcpTransport t;
  wire::Request req{Verb::Put, "/x/y", {{"Subject", "/O=Grid/CN=A"}}, ""};
  req.set_body(std::string("a\0b\n", 4));
  auto resp = t.call(ep, req, "ui");
  EXPECT_EQ(resp.code, 200);
  EXPECT_EQ(resp.body, std::string("a\0b\n", 4));
  EXPECT_EQ(resp.headers.get("Target"), "/x/y");

  for (std::string bad : {std::string("NGP/1 HELLO /x\n\n"), std::string("garbage\n\n"),
                          std::string("NGP/1 GET /x\nContent-Length: 9\n\nabc"), std::string("NGP/1 GET")}) {
    std::string raw = ngtest::raw_exchange(server.port(), bad);
    ASSERT_FALSE(raw.empty()) << bad;
    EXPECT_EQ(wire::decode_response(raw).code, 400) << bad;
  }
  server.stop();
}

TEST(WireTcp, KeepAliveServesSeveralFrames) {
  Echo echo;
  net::TcpServer server(echo, "127.0.0.1", 0);
  server.start();
  wire::Request a{Verb::Get, "/a", {{"Subject", "/O=Grid/CN=A"}, {"Connection", "keep-alive"}}, ""};
  wire::Request b{Verb::Get, "/b", {{"Subject", "/O=Grid/CN=A"}}, ""};
  std::string raw = ngtest::raw_exchange(server.port(), wire::encode(a) + wire::encode(b));
  auto first = wire::decode(raw);
  auto second = wire::decode(std::string_view(raw).substr(first.consumed));
  EXPECT_EQ(std::get<wire::Response>(first.message).headers.get("Target"), "/a");
  EXPECT_EQ(std::get<wire::Response>(second.message).headers.get("Target"), "/b");
  server.stop();
}

TEST(WireInProcess, LedgerSeparatesPayloadFromControl) {
  Echo echo;
  net::InProcessNetwork net;
  net.bind("se1:1", &echo, "se");
  wire::Request put{Verb::Put, "/f", {{"Subject", "/O=Grid/CN=A"}}, ""};
  put.set_body("12345");
  net.call("se1:1", put, "cluster");
  net.call("se1:1", wire::Request{Verb::Stat, "/f", {{"Subject", "/O=Grid/CN=A"}}, ""}, "ui");
  auto rows = net.ledger().snapshot();
  std::size_t payload = 0;
  for (const auto& r : rows)
    if (r.purpose == net::Purpose::Payload) {
      payload += r.bytes;
      EXPECT_EQ(r.from, "cluster");
      EXPECT_EQ(r.to, "se");
    }
  EXPECT_EQ(payload, 5u);
  net.set_down("se1:1", true);
  EXPECT_THROW(net.call("se1:1", put, "ui"), net::TransportError);
}
