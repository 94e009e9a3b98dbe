fn main() {
    std::process::exit(uilsim::cli::run(std::env::args_os()));
}
