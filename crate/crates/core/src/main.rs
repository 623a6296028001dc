fn main() {
    std::process::exit(irpkit::expkit::run_cli(std::env::args()));
}
