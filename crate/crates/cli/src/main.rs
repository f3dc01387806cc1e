fn main() {
    std::process::exit(patch_completion_cli::run(std::env::args_os()));
}
