#include <boost/asio.hpp>
#include <thread>

#include "rvarena/error.hpp"
#include "rvarena/protocol.hpp"

namespace rvarena {

namespace asio = boost::asio;
using asio::ip::tcp;

namespace {

void serve_connection(tcp::socket socket, ProtocolHandler& handler) {
  try {
    asio::streambuf buf;
    boost::system::error_code ec;
    for (;;) {
      asio::read_until(socket, buf, '\n', ec);
      if (ec && buf.size() == 0) break;
      std::istream is(&buf);
      std::string line;
      if (!std::getline(is, line)) break;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) {
        const std::string out = handler.handle_line(line) + "\n";
        asio::write(socket, asio::buffer(out));
      }
      if (ec) break;
    }
  } catch (const std::exception&) {
    // Peer went away; nothing to report on a closed socket.
  }
}

}  // namespace

void serve_tcp(const std::string& host, unsigned short port, ProtocolHandler& handler,
               const std::function<void(unsigned short)>& on_ready) {
  asio::io_context io;
  boost::system::error_code ec;
  const auto addr = asio::ip::make_address(host, ec);
  if (ec) throw Error(ErrorKind::invalid_argument, "bad listen host '" + host + "'");
  tcp::acceptor acceptor(io, tcp::endpoint(addr, port));
  if (on_ready) on_ready(acceptor.local_endpoint().port());
  for (;;) {
    tcp::socket socket(io);
    acceptor.accept(socket);
    std::thread(serve_connection, std::move(socket), std::ref(handler)).detach();
  }
}

}  // namespace rvarena
