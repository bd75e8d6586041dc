fn main() {
    std::process::exit(envest::run(std::env::args_os()));
}
