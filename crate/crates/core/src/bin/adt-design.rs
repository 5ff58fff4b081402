fn main() {
    std::process::exit(adt_design::cli::run(std::env::args_os()));
}
