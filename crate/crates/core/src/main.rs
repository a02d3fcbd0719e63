fn main() {
    std::process::exit(permsec::cli::run());
}
