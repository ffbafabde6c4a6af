// Regenerates tests/fixtures/e2e/transcript.jsonl from the fake toolchain.
#include <iostream>

#include "e2e.hpp"
#include "test_support.hpp"

int main(int argc, char** argv) {
  namespace t = gangmam::test;
  const std::filesystem::path out = argc > 1 ? argv[1] : t::e2e_transcript();
  try {
    t::TempDir scratch;
    t::record_e2e_transcript(out, scratch.path());
  } catch (const std::exception& e) {
    std::cerr << "fixturegen: " << e.what() << '\n';
    return 1;
  }
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}
