fn main() {
    std::process::exit(ckpt_drift::cli::run(std::env::args_os()));
}
