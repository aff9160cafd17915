fn main() {
    std::process::exit(cdl::cli::main());
}
