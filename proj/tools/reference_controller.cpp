// Reference client for the external-controller wire protocol, useful both as
// a template for bridging a real policy (any language works the same way) and
// as a fixture for exercising the host side, including its failure paths.
//
// Protocol (little-endian, over stdin/stdout): each message is a u32 payload
// length followed by the payload; payload byte 0 is the type.
//   0x01 HELLO      host->ctl  u32 version, u32 width, u32 height,
//                              f64 hfov_rad, f64 horizon_row,
//                              f64 camera_height_m, f64 vertical_scale_px
//   0x02 HELLO_ACK  ctl->host  u32 version
//   0x03 REQUEST    host->ctl  u64 seq, f64 speed_mps, u32 width, u32 height,
//                              width*height*3 bytes row-major RGB
//   0x04 REPLY      ctl->host  u64 seq, f64 angle_rad
//   0x05 BYE        host->ctl  (empty)
//
// Usage: lanesim-refctl [--angle-deg X] [--mode const|slow|garbage|die|noack]
//   const    reply the configured angle to every request (default)
//   slow     sleep past any sane frame deadline before replying
//   garbage  reply with a malformed message
//   die      exit silently after the handshake
//   noack    never answer the handshake

#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

namespace {

bool read_exact(void* buf, size_t n) {
  uint8_t* p = static_cast<uint8_t*>(buf);
  while (n > 0) {
    ssize_t r = read(STDIN_FILENO, p, n);
    if (r <= 0) return false;
    p += r;
    n -= static_cast<size_t>(r);
  }
  return true;
}

bool write_exact(const void* buf, size_t n) {
  const uint8_t* p = static_cast<const uint8_t*>(buf);
  while (n > 0) {
    ssize_t r = write(STDOUT_FILENO, p, n);
    if (r <= 0) return false;
    p += r;
    n -= static_cast<size_t>(r);
  }
  return true;
}

uint32_t rd_u32(const uint8_t* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
  return v;
}

uint64_t rd_u64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

void wr_u32(std::vector<uint8_t>& b, uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void wr_u64(std::vector<uint8_t>& b, uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void wr_f64(std::vector<uint8_t>& b, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  wr_u64(b, bits);
}

bool send_message(const std::vector<uint8_t>& payload) {
  uint8_t hdr[4];
  uint32_t len = static_cast<uint32_t>(payload.size());
  for (int i = 0; i < 4; ++i) hdr[i] = static_cast<uint8_t>(len >> (8 * i));
  return write_exact(hdr, 4) && write_exact(payload.data(), payload.size());
}

bool receive_message(std::vector<uint8_t>& payload) {
  uint8_t hdr[4];
  if (!read_exact(hdr, 4)) return false;
  uint32_t len = rd_u32(hdr);
  if (len == 0 || len > 64u * 1024u * 1024u) return false;
  payload.resize(len);
  return read_exact(payload.data(), len);
}

}  // namespace

int main(int argc, char** argv) {
  double angle_rad = 0.0;
  std::string mode = "const";
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--angle-deg" && i + 1 < argc) {
      angle_rad = std::atof(argv[++i]) * 3.14159265358979323846 / 180.0;
    } else if (arg == "--mode" && i + 1 < argc) {
      mode = argv[++i];
    } else {
      std::fprintf(stderr, "unknown argument: %s\n", arg.c_str());
      return 2;
    }
  }

  std::vector<uint8_t> msg;
  if (!receive_message(msg) || msg.empty() || msg[0] != 0x01 || msg.size() != 1 + 4 + 4 + 4 + 4 * 8) {
    std::fprintf(stderr, "refctl: bad HELLO\n");
    return 1;
  }
  uint32_t version = rd_u32(msg.data() + 1);

  if (mode == "noack") {
    // Stall the handshake so the host exercises its timeout path.
    for (;;) pause();
  }

  std::vector<uint8_t> ack;
  ack.push_back(0x02);
  wr_u32(ack, version);
  if (!send_message(ack)) return 1;

  if (mode == "die") return 0;

  for (;;) {
    if (!receive_message(msg)) return 0;
    if (msg.empty()) return 1;
    if (msg[0] == 0x05) return 0;  // BYE
    if (msg[0] != 0x03 || msg.size() < 1 + 8 + 8 + 4 + 4) {
      std::fprintf(stderr, "refctl: unexpected message type %u\n", msg[0]);
      return 1;
    }
    uint64_t seq = rd_u64(msg.data() + 1);
    uint32_t w = rd_u32(msg.data() + 17);
    uint32_t h = rd_u32(msg.data() + 21);
    if (msg.size() != 1 + 8 + 8 + 4 + 4 + static_cast<size_t>(w) * h * 3) {
      std::fprintf(stderr, "refctl: request size mismatch\n");
      return 1;
    }

    if (mode == "slow") sleep(3);

    std::vector<uint8_t> reply;
    if (mode == "garbage") {
      reply.assign({0x04, 0xde, 0xad});
    } else {
      reply.push_back(0x04);
      wr_u64(reply, seq);
      wr_f64(reply, angle_rad);
    }
    if (!send_message(reply)) return 1;
  }
}
