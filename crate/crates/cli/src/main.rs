fn main() {
    std::process::exit(swarm_sim::main_with_args(std::env::args_os()));
}
