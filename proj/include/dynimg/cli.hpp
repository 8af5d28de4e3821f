#pragma once

namespace dynimg {

// Entry point for the `dynimg` tool. Subcommands: synth, extract, prune,
// pipeline, train, eval, report. Returns 0 on success, 1 on usage errors,
// 2 on data errors.
int cli_main(int argc, const char* const* argv);

}  // namespace dynimg
