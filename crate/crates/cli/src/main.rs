fn main() {
    std::process::exit(shearstab_cli::dispatch(std::env::args_os()));
}
